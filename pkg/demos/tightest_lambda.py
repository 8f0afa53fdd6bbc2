"""Searching the fractional-partition polytope for the tightest lambda.

I_lambda is affine in lambda, so the best weighting is a vertex of the
polytope. Vertex enumeration and the simplex solver agree; keysets cut
the polytope down to an admissible face.
"""
import numpy as np

from skcap import JointDist, fracpart, lambda_mi


def show(fp):
    return " ".join(f"{set(fracpart.members(m))}:{w:.3g}" for m, w in fp.items())


for k in range(2, 6):
    print(f"k={k}: {len(fracpart.vertices(k))} vertices")

rng = np.random.default_rng(3)
k = 4
names = [f"X{i}" for i in range(1, k + 1)]
d = JointDist.from_array(names, rng.dirichlet(0.3 * np.ones(2 ** k)).reshape((2,) * k))

# coefficient of lambda_B is -H(X_B | X_Bc)
h_all = d.entropy(names)
coef = {}
for m in fracpart.proper_masks(k):
    rest = [n for i, n in enumerate(names, 1) if not m >> (i - 1) & 1]
    coef[m] = -(h_all - d.entropy(rest))

print("\nrandom 4-bit source")
for r in (None, 2, 3):
    for method in ("vertex", "simplex"):
        fp, lin = fracpart.optimize_linear(k, coef, "min", method=method, r=r)
        val = h_all + lin
        check = lambda_mi.i_lambda(d, names, fp)
        print(f"  r={r!s:<4} {method:<8} min I_lambda={val:.6f} (direct {check:.6f})  {show(fp)}")

print("\nsimplex beyond vertex enumeration")
for k in (6, 8, 10):
    c = rng.normal(size=(1 << k) - 2)
    fp, val = fracpart.optimize_linear(k, c, "min")
    print(f"  k={k:<3} {len(fp.weights)} nonzero weights, objective {val:.6f}, valid={fracpart.is_valid(fp)}")
