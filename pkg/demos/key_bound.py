"""Upper bounds on the secret-key capacity of small wiretap systems.

Every value printed is a lower estimate of the max-form bound (a search
over inputs and auxiliaries), so the bounds are labelled uncertified.
"""
import time

from skcap import fracpart, keybound
from skcap.keybound import OptimizerConfig
from skcap.props import load_preset

lam = fracpart.preset_uniform_km1(2)

for name, aux in [("public_channel", "z"), ("bsc_wimwc", "z"), ("source_model", "z")]:
    sys_ = keybound.system_from_json(load_preset(name))
    t0 = time.perf_counter()
    rep = keybound.key_capacity_bound(sys_, aux, lam, OptimizerConfig(grid_res=9))
    print(f"{name} (T = Z, grid 9, {time.perf_counter() - t0:.1f}s)")
    print("  " + rep.table().replace("\n", "\n  "))

# grid refinement never lowers the estimate since the grids are nested
sys_ = keybound.system_from_json(load_preset("bsc_wimwc"))
print("\nbsc_wimwc main channel under grid refinement")
for res in (3, 5, 9, 17):
    v = keybound.v_lambda(sys_.main, "z", lam, OptimizerConfig(grid_res=res)).value
    print(f"  res={res:<3} V={v:.6f}")

# random-restart ascent with larger auxiliary alphabets
v = keybound.v_lambda(sys_.main, "z", lam, OptimizerConfig(restarts=8, card_u=3, card_v=3))
print(f"  ascent, 8 restarts, |U|=|V|=3: V={v.value:.6f} converged={v.converged}")
