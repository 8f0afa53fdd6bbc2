"""Lambda-mutual information on a few small sources.

Shows the k=2 reduction to ordinary mutual information, the
total-correlation identities, and the partition lower bound at k=3.
"""
import numpy as np

from skcap import JointDist, fracpart, lambda_mi, mutual_info
from skcap.props import load_preset
from skcap.dist import dist_from_json


def show(fp):
    return " ".join(f"{set(fracpart.members(m))}:{w:g}" for m, w in fp.items())


# two correlated bits: I_lambda is just I(X1;X2) = 1 - h(0.1)
bits = dist_from_json(load_preset("correlated_bits"))
lam = fracpart.preset_uniform_km1(2)
print("correlated bits")
print(f"  I_lambda  = {lambda_mi.i_lambda(bits, ['X1', 'X2'], lam):.6f}")
print(f"  I(X1;X2)  = {mutual_info(bits, 'X1', 'X2'):.6f}")

# three bits, X3 = X1 xor X2 with X1, X2 fair: pairwise independent, jointly dependent
p = np.zeros((2, 2, 2))
for a in range(2):
    for b in range(2):
        p[a, b, a ^ b] = 0.25
xor = JointDist.from_array(["X1", "X2", "X3"], p)
names = ["X1", "X2", "X3"]
print("\nxor triple")
print(f"  total correlation J = {lambda_mi.j_info(xor, names):.6f}")
for label, fp in [("uniform 1/(k-1)", fracpart.preset_uniform_km1(3)),
                  ("pairs preset", fracpart.fp_from_json(load_preset("lambda_k3_pairs"))),
                  ("{1,2}|{3}", fracpart.parse_preset("partition:1,2|3", 3))]:
    print(f"  I_lambda[{label:>16}] = {lambda_mi.i_lambda(xor, names, fp):.6f}")

val, ref, gap = lambda_mi.tc_identity_check(xor, names)
print(f"  uniform lambda vs J/(k-1): {val:.6f} vs {ref:.6f} (gap {gap:.1e})")

# the minimum over set partitions of I(pi) lower-bounds every I_lambda
rng = np.random.default_rng(1)
d = JointDist.from_array(names, rng.dirichlet(np.ones(8)).reshape(2, 2, 2))
print("\nrandom triple, partition bound")
for fp in fracpart.vertices(3):
    lhs, rhs, pi = lambda_mi.partition_bound_check(d, names, fp)
    print(f"  {show(fp):<32} I_lambda={lhs:.4f} >= {rhs:.4f}")
