"""Randomized property suite over every inequality and identity the library checks.

Each check returns a :class:`Check`; :func:`run_all` runs the full suite
deterministically from one seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import dbbound, fracpart, keybound, lambda_mi, macregion
from .dist import (
    Channel,
    VarSpec,
    channel_from_json,
    cond_mutual_info,
    load_json,
    random_channel,
    random_joint,
)
from .keybound import OptimizerConfig

TOL = 1e-9


@dataclass
class Check:
    name: str
    passed: bool
    count: int
    worst: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"; {self.detail}" if self.detail else ""
        return f"{tag} {self.name}: n={self.count}, worst={self.worst:.3e}{extra}"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def preset_path(name: str):
    return resources.files("skcap") / "presets" / f"{name}.json"


def load_preset(name: str) -> dict:
    return load_json(preset_path(name))


def _random_fp(rng, k):
    """Random point of the polytope: a Dirichlet mixture of a few vertices (k <= 5)."""
    verts = fracpart.vertices(k)
    m = min(len(verts), int(rng.integers(1, 4)))
    pick = rng.choice(len(verts), size=m, replace=False)
    w = rng.dirichlet(np.ones(m))
    vec = sum(wi * verts[i].vector() for wi, i in zip(w, pick))
    return fracpart.FractionalPartition.from_vector(k, vec)


def _random_instance(rng, k, max_card=4, cond=False):
    vars_ = [VarSpec(f"X{i}", int(rng.integers(2, max_card + 1))) for i in range(1, k + 1)]
    if cond:
        vars_.append(VarSpec("C", int(rng.integers(2, 4))))
    alpha = float(rng.choice([0.3, 1.0]))
    return random_joint(rng, vars_, alpha)


@_timed
def check_nonnegativity(seed: int, count: int = 1000) -> Check:
    rng = np.random.default_rng([seed, 1])
    worst = math.inf
    for _ in range(count):
        k = int(rng.integers(2, 5))
        cond = bool(rng.integers(2))
        d = _random_instance(rng, k, cond=cond)
        v = lambda_mi.i_lambda(d, [f"X{i}" for i in range(1, k + 1)], _random_fp(rng, k),
                               ("C",) if cond else ())
        worst = min(worst, v)
    return Check("nonnegativity", worst >= -TOL, count, worst, "min I_lambda")


@_timed
def check_k2_reduction(seed: int, count: int = 200) -> Check:
    rng = np.random.default_rng([seed, 2])
    fp = fracpart.preset_uniform_km1(2)
    worst = 0.0
    for _ in range(count):
        cond = bool(rng.integers(2))
        d = _random_instance(rng, 2, cond=cond)
        c = ("C",) if cond else ()
        gap = abs(lambda_mi.i_lambda(d, ["X1", "X2"], fp, c) - cond_mutual_info(d, "X1", "X2", c))
        worst = max(worst, gap)
    return Check("k2_reduction", worst <= TOL, count, worst, "max |I_lambda - I|")


def _random_partition(rng, k):
    while True:
        labels = rng.integers(0, k, size=k)
        blocks = {}
        for i, lab in enumerate(labels, 1):
            blocks.setdefault(int(lab), []).append(i)
        if len(blocks) >= 2:
            return fracpart.Partition(blocks[b] for b in sorted(blocks))


@_timed
def check_tc_identities(seed: int, count: int = 200) -> Check:
    rng = np.random.default_rng([seed, 3])
    worst = 0.0
    for _ in range(count):
        k = int(rng.integers(2, 6))
        d = _random_instance(rng, k, max_card=3 if k == 5 else 4)
        names = [f"X{i}" for i in range(1, k + 1)]
        for variant in ("km1", _random_partition(rng, k)):
            worst = max(worst, abs(lambda_mi.tc_identity_check(d, names, variant)[2]))
    return Check("tc_identities", worst <= TOL, count, worst, "max |I_lambda - J/(r-1)|")


@_timed
def check_partition_bound(seed: int, count: int = 300) -> Check:
    rng = np.random.default_rng([seed, 4])
    worst = math.inf
    for _ in range(count):
        k = int(rng.integers(3, 5))
        d = _random_instance(rng, k)
        lhs, rhs, _ = lambda_mi.partition_bound_check(d, [f"X{i}" for i in range(1, k + 1)], _random_fp(rng, k))
        worst = min(worst, lhs - rhs)
    return Check("partition_lower_bound", worst >= -TOL, count, worst, "min I_lambda - min_partition")


@_timed
def check_data_processing(seed: int, count: int = 200) -> Check:
    rng = np.random.default_rng([seed, 5])
    worst = math.inf
    for _ in range(count):
        k = int(rng.integers(2, 4))
        d = _random_instance(rng, k, max_card=3)
        chans = [random_channel(rng, [d.vars[i]], [VarSpec(f"Y{i + 1}", int(rng.integers(1, 4)))], 0.5)
                 for i in range(k)]
        before, after = lambda_mi.data_processing_gap(d, [f"X{i}" for i in range(1, k + 1)],
                                                      _random_fp(rng, k), chans)
        worst = min(worst, before - after)
    return Check("data_processing", worst >= -TOL, count, worst, "min before - after")


@_timed
def check_private_noise(seed: int, count: int = 200) -> Check:
    from .dist import product
    rng = np.random.default_rng([seed, 6])
    worst = 0.0
    for _ in range(count):
        k = int(rng.integers(2, 4))
        d = _random_instance(rng, k, max_card=3)
        noise = [random_joint(rng, [VarSpec(f"N{i}", int(rng.integers(2, 4)))]) for i in range(1, k + 1)]
        dn = product(d, *noise)
        fp = _random_fp(rng, k)
        a = lambda_mi.i_lambda(d, [f"X{i}" for i in range(1, k + 1)], fp)
        b = lambda_mi.i_lambda(dn, [(f"X{i}", f"N{i}") for i in range(1, k + 1)], fp)
        worst = max(worst, abs(a - b))
    return Check("private_noise_invariance", worst <= TOL, count, worst, "max |change|")


@_timed
def check_dependence_balance(seed: int, count: int = 200) -> Check:
    rng = np.random.default_rng([seed, 7])
    worst = -math.inf
    worst_mem = 0.0
    for _ in range(count):
        k = int(rng.integers(2, 4))
        n = int(rng.integers(1, 4))
        chans = [dbbound.binary_step_channel(rng, k) for _ in range(2)]
        code = dbbound.random_code(rng, k, n, schedule=rng.integers(0, 2, size=n))
        aux = random_channel(rng, [VarSpec(f"a{i}", 2) for i in range(2 * k + 1)], [VarSpec("T", 2)], 0.5)
        trace = dbbound.simulate_code(code, chans, aux)
        fp = _random_fp(rng, k)
        for cname in ("Z", "T"):
            lhs, rhs = dbbound.dependence_balance_sides(trace, fp, cname)
            worst = max(worst, lhs - rhs)
        worst_mem = max(worst_mem, max(dbbound.memoryless_gaps(trace)))
    ok = worst <= TOL and worst_mem <= TOL
    return Check("dependence_balance", ok, count, worst,
                 f"max lhs - rhs over Z and T; max memory gap {worst_mem:.1e}")


def _system(name):
    return keybound.system_from_json(load_preset(name))


@_timed
def check_key_bound_sanity(seed: int) -> Check:
    pub = _system("public_channel")
    par = pub.parallels[0][0]
    fp = fracpart.preset_uniform_km1(2)
    cfg = OptimizerConfig(grid_res=9, master_seed=seed)
    v_pub = keybound.v_lambda(par, "z", fp, cfg).value
    base = _system("bsc_wimwc")
    extra = keybound.WiMWCSystem(base.k, base.r, base.main, [(par, 0.0)])
    cfg5 = OptimizerConfig(grid_res=5, master_seed=seed)
    b0 = keybound.key_capacity_bound(base, "z", fp, cfg5).value
    b1 = keybound.key_capacity_bound(extra, "z", fp, cfg5).value
    ok = abs(v_pub) <= 1e-6 and b0 == b1
    return Check("key_bound_sanity", ok, 2, abs(v_pub),
                 f"public V={v_pub:.3e}; bound {b0!r} vs alpha=0 extra {b1!r}")


def _grad_check(seed: int, points: int = 20) -> float:
    rng = np.random.default_rng([seed, 8])
    fp = fracpart.preset_uniform_km1(2)
    X = [VarSpec("X1", 2), VarSpec("X2", 2)]
    outs = [VarSpec("Y1", 2), VarSpec("Y2", 2), VarSpec("Z", 2)]
    worst = 0.0
    for _ in range(points):
        ch = random_channel(rng, X, outs)
        aux = random_channel(rng, X + outs, [VarSpec("T", 2)])
        chT = keybound.attach_receiver(ch, aux)
        px = rng.dirichlet(np.ones(4) * 3)
        puv = rng.dirichlet(np.ones(4), size=(2, 2, 2, 2)).reshape(2, 2, 2, 2, 2, 2)
        gx, _ = keybound.v_objective_grad(px.reshape(2, 2), chT, puv, fp)
        g = gx.ravel()
        analytic = g[:3] - g[3]  # free coordinates p1..p3, p4 = 1 - sum
        h = 1e-5
        fd = np.zeros(3)
        for i in range(3):
            e = np.zeros(4)
            e[i], e[3] = 1.0, -1.0
            fp_ = keybound.v_objective((px + h * e).reshape(2, 2), chT, puv, fp)
            fm_ = keybound.v_objective((px - h * e).reshape(2, 2), chT, puv, fp)
            fd[i] = (fp_ - fm_) / (2 * h)
        worst = max(worst, float(np.linalg.norm(fd - analytic) / max(np.linalg.norm(analytic), 1e-12)))
    return worst


def _monotone_channels(seed):
    rng = np.random.default_rng([seed, 9])
    X = [VarSpec("X1", 2), VarSpec("X2", 2)]
    outs = [VarSpec("Y1", 2), VarSpec("Y2", 2), VarSpec("Z", 2)]
    noisy = random_channel(rng, X, outs)
    aux = random_channel(rng, X + outs, [VarSpec("T", 2)])
    return [("bsc_wimwc T=Z", _system("bsc_wimwc").main, "z", {}),
            ("random T=Z", random_channel(rng, X, outs), "z", {}),
            ("random noisy T", noisy, aux, {"card_u": 2, "card_v": 2, "restarts": 1})]


@_timed
def check_optimizer_integrity(seed: int) -> Check:
    grad_err = _grad_check(seed)
    fp = fracpart.preset_uniform_km1(2)
    sys_ = _system("public_channel")
    cfg = OptimizerConfig(master_seed=seed, restarts=2)
    r1 = keybound.key_capacity_bound(sys_, "z", fp, cfg).dumps()
    r2 = keybound.key_capacity_bound(sys_, "z", fp, cfg).dumps()
    deterministic = r1 == r2
    monotone = True
    notes = []
    for label, ch, aux, extra in _monotone_channels(seed):
        vals = [keybound.v_lambda(ch, aux, fp, OptimizerConfig(grid_res=res, master_seed=seed, **extra)).value
                for res in (5, 9, 17)]
        monotone &= all(b >= a for a, b in zip(vals, vals[1:]))
        notes.append(f"{label}: " + "/".join(f"{v:.6f}" for v in vals))
    ok = grad_err <= 1e-4 and deterministic and monotone
    return Check("optimizer_integrity", ok, 20, grad_err,
                 f"grad rel err; deterministic={deterministic}; monotone={monotone} ({'; '.join(notes)})")


def bundled_macs() -> dict[str, macregion.GenFeedbackMAC]:
    return {name: macregion.mac_from_json(load_preset(name)) for name in ("adder_mac", "adder_mac_noisy_fb")}


@_timed
def check_mac(seed: int, restarts: int = 2) -> Check:
    macs = bundled_macs()
    cfg = OptimizerConfig(grid_res=9, master_seed=seed, restarts=restarts)
    s = macregion.outer_sum_rate(macs["adder_mac"], cfg)
    sandwich = 1.5 <= s <= 1.58497
    contained = True
    for mac in macs.values():
        full = macregion.outer_region(mac, cfg)
        loose = macregion.outer_region(mac, cfg, drop_6b=True)
        contained &= loose.contains_region(full)
    return Check("mac_region", sandwich and contained, len(macs), s,
                 f"adder sum rate in [1.5, 1.58497]: {sandwich}; drop-6b containment: {contained}")


@_timed
def check_polytope(seed: int, count: int = 100) -> Check:
    rng = np.random.default_rng([seed, 10])
    worst = 0.0
    for _ in range(count):
        k = int(rng.integers(2, 6))
        c = rng.normal(size=(1 << k) - 2)
        sense = "min" if rng.integers(2) else "max"
        verts = np.array([v.vector() for v in fracpart.vertices(k)])
        vals = verts @ c
        target = vals.min() if sense == "min" else vals.max()
        for method in ("simplex", "vertex"):
            fp, val = fracpart.optimize_linear(k, c, sense, method=method)
            worst = max(worst, abs(val - target))
            if fracpart.validate(fp):
                worst = math.inf
    return Check("polytope_lp", worst <= TOL, count, worst, "max |LP - vertex optimum|")


QUICK_COUNTS = {"nonnegativity": 200, "k2_reduction": 50, "tc_identities": 50, "partition_bound": 60,
                "data_processing": 50, "private_noise": 50, "dependence_balance": 30, "polytope": 30}


def run_all(seed: int = 0, quick: bool = False, include_slow: bool = True) -> list[Check]:
    q = QUICK_COUNTS if quick else {}
    checks = [
        check_nonnegativity(seed, q.get("nonnegativity", 1000)),
        check_k2_reduction(seed, q.get("k2_reduction", 200)),
        check_tc_identities(seed, q.get("tc_identities", 200)),
        check_partition_bound(seed, q.get("partition_bound", 300)),
        check_data_processing(seed, q.get("data_processing", 200)),
        check_private_noise(seed, q.get("private_noise", 200)),
        check_dependence_balance(seed, q.get("dependence_balance", 200)),
        check_polytope(seed, q.get("polytope", 100)),
        check_key_bound_sanity(seed),
    ]
    if include_slow:
        checks += [check_optimizer_integrity(seed), check_mac(seed)]
    return checks
