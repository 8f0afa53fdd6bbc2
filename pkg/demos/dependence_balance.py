"""Dependence balance for interactive codes.

Each code is simulated exactly over a memoryless channel; the dependence
the terminals build up end to end never exceeds the per-letter total.
"""
import numpy as np

from skcap import VarSpec, dbbound, fracpart
from skcap.dist import random_channel
from skcap.props import load_preset

code, channels = dbbound.code_from_json(load_preset("feedback_code"))
trace = dbbound.simulate_code(code, channels)
lhs, rhs = dbbound.dependence_balance_sides(trace, fracpart.preset_uniform_km1(2))
print(f"bundled feedback code: lhs={lhs:.6f}  rhs={rhs:.6f}  support rows={len(trace.p)}")

rng = np.random.default_rng(11)
print("\nrandom codes (k, n, lhs, rhs conditioned on Z, rhs conditioned on T)")
worst = -np.inf
for _ in range(12):
    k = int(rng.integers(2, 4))
    n = int(rng.integers(1, 4))
    chans = [dbbound.binary_step_channel(rng, k) for _ in range(2)]
    code = dbbound.random_code(rng, k, n, schedule=rng.integers(0, 2, size=n))
    width = 2 * k + 1
    aux = random_channel(rng, [VarSpec(f"a{i}", 2) for i in range(width)], [VarSpec("T", 2)])
    trace = dbbound.simulate_code(code, chans, aux)
    fp = fracpart.preset_uniform_km1(k)
    lz, rz = dbbound.dependence_balance_sides(trace, fp, "Z")
    lt, rt = dbbound.dependence_balance_sides(trace, fp, "T")
    worst = max(worst, lz - rz, lt - rt)
    print(f"  k={k} n={n}  Z: {lz:.4f} <= {rz:.4f}   T: {lt:.4f} <= {rt:.4f}")
print(f"\nlargest lhs - rhs: {worst:.2e}")
