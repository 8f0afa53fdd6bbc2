"""Upper bound on the secret-key capacity of wiretap multi-way channels.

A channel of the system has k inputs (X1..Xk) and k+1 outputs
(Y1..Yk, then the eavesdropper Z), matched by position. The auxiliary
receiver reads (X1..Xk, Y1..Yk, Z) and emits T.

V_lambda(q) is a maximum over p(x) and p(u,v|x,y); it is estimated from
below, so every reported bound is uncertified.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _ascent
from .dist import (
    MAX_CELLS,
    Channel,
    JointDist,
    SizeError,
    VarSpec,
    channel_from_json,
    channel_to_json,
    cond_mutual_info,
    push_through,
)
from .fracpart import FractionalPartition, admissible_for_keyset, require_valid
from .lambda_mi import i_lambda, i_lambda_terms


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs shared by the V_lambda and MAC-region maximizers.

    ``card_u``/``card_v`` default to |X_[k]| + 1; ``card_t1``/``card_t2``
    default to the MAC caps 5 and |X1||X2| + 3.
    """

    restarts: int = 4
    master_seed: int = 0
    step_init: float = 1.0
    tol: float = 1e-7
    max_iters: int = 300
    grid_res: int | None = None
    card_u: int | None = None
    card_v: int | None = None
    card_t1: int | None = None
    card_t2: int | None = None

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.grid_res is not None and self.grid_res < 2:
            raise ValueError("grid_res must be at least 2")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


# ---------------------------------------------------------------- channels

def _canonical(ch: Channel, k: int) -> Channel:
    if len(ch.in_vars) != k or len(ch.out_vars) != k + 1:
        raise ValueError(f"{ch!r}: expected {k} inputs and {k + 1} outputs (Y1..Yk, Z)")
    names = [f"X{i}" for i in range(1, k + 1)] + [f"Y{i}" for i in range(1, k + 1)] + ["Z"]
    return Channel([VarSpec(n, v.card) for n, v in zip(names[:k], ch.in_vars)],
                   [VarSpec(n, v.card) for n, v in zip(names[k:], ch.out_vars)], ch.probs)


def _canonical_aux(aux: Channel, k: int) -> Channel:
    if len(aux.in_vars) != 2 * k + 1 or len(aux.out_vars) != 1:
        raise ValueError("auxiliary receiver must read (X1..Xk, Y1..Yk, Z) and emit one variable T")
    names = [f"X{i}" for i in range(1, k + 1)] + [f"Y{i}" for i in range(1, k + 1)] + ["Z"]
    return Channel([VarSpec(n, v.card) for n, v in zip(names, aux.in_vars)],
                   [VarSpec("T", aux.out_vars[0].card)], aux.probs)


def t_equals_z(ch: Channel) -> Channel:
    """Auxiliary receiver that copies the eavesdropper output."""
    k = len(ch.in_vars)
    c = _canonical(ch, k)
    zcard = c.out_vars[-1].card
    return Channel.deterministic(c.in_vars + c.out_vars, [VarSpec("T", zcard)],
                                 lambda *args: args[-1])


def attach_receiver(ch: Channel, aux: Channel | str) -> Channel:
    """q(y, z, t | x) = q(y, z | x) * aux(t | x, y, z); ``aux="z"`` means T = Z."""
    k = len(ch.in_vars)
    c = _canonical(ch, k)
    a = t_equals_z(c) if isinstance(aux, str) and aux.lower() == "z" else _canonical_aux(aux, k)
    if a.in_shape != c.in_shape + c.out_shape:
        raise ValueError("auxiliary receiver alphabets do not match the channel")
    nx, ny = math.prod(c.in_shape), math.prod(c.out_shape)
    nt = a.out_vars[0].card
    q = c.matrix()[:, :, None] * a.probs.reshape(nx, ny, nt)
    return Channel(c.in_vars, c.out_vars + a.out_vars, q.reshape(c.in_shape + c.out_shape + (nt,)))


# ---------------------------------------------------------------- objective

class _VProblem:
    """Fast evaluation of the V_lambda objective on flat arrays.

    px: (nx,), puv: (nx, ny, nu*nv) with ny the flat Y1..Yk index.
    """

    def __init__(self, chT: Channel, fp: FractionalPartition, card_u: int, card_v: int):
        k = fp.k
        if len(chT.in_vars) != k or len(chT.out_vars) != k + 2:
            raise ValueError("channel must map X1..Xk to (Y1..Yk, Z, T)")
        require_valid(fp)
        self.k, self.fp = k, fp
        self.xshape = chT.in_shape
        self.yshape = chT.out_shape[:k]
        self.nz, self.nt = chT.out_shape[k], chT.out_shape[k + 1]
        self.nu, self.nv = card_u, card_v
        self.nx, self.ny = math.prod(self.xshape), math.prod(self.yshape)
        cells = self.nx * self.ny * self.nz * self.nt * self.nu * self.nv
        if cells > MAX_CELLS:
            raise SizeError(f"composed joint has {cells} cells, above the cap of {MAX_CELLS}")
        self.q = chT.probs.reshape(self.nx, self.ny, self.nz, self.nt)
        self.q2 = self.q.reshape(self.nx * self.ny, self.nz * self.nt)
        xs = [f"X{i}" for i in range(1, k + 1)]
        ys = [f"Y{i}" for i in range(1, k + 1)]
        groups_xy = [(x, y) for x, y in zip(xs, ys)]
        terms = [(c, n) for c, n in i_lambda_terms(k, fp, groups_xy, ("T",))]
        terms += [(-c, n) for c, n in i_lambda_terms(k, fp, [(x,) for x in xs])]
        self.main_names = tuple(xs + ys + ["Z", "T"])
        self.main_shape = self.xshape + self.yshape + (self.nz, self.nt)
        self.main = _ascent.EntropyExpr(self.main_names, terms)
        # I(V;T|U) - I(V;Z|U) = H(TU) - H(VTU) - H(ZU) + H(VZU)
        self.aux = _ascent.EntropyExpr(("Z", "T", "U", "V"), [
            (1.0, ("T", "U")), (-1.0, ("V", "T", "U")), (-1.0, ("Z", "U")), (1.0, ("V", "Z", "U"))])
        self.aux_vanishes = self._t_is_relabeled_z()

    def _t_is_relabeled_z(self) -> bool:
        # T and Z determine each other on every reachable (z, t) pair
        zt = self.q.sum(axis=(0, 1)) > 0
        return bool(np.all(zt.sum(axis=0) <= 1) and np.all(zt.sum(axis=1) <= 1))

    def joint_main(self, px):
        return (px[:, None, None, None] * self.q).reshape(self.main_shape)

    def _pq(self, px):
        return (px[:, None, None] * self.q2.reshape(self.nx, self.ny, -1)).reshape(self.nx * self.ny, -1)

    def joint_aux(self, px, puv):
        p = self._pq(px).T @ puv.reshape(self.nx * self.ny, -1)
        return p.reshape(self.nz, self.nt, self.nu, self.nv)

    def value_main(self, px) -> float:
        return self.main.value(self.joint_main(px))

    def value_aux(self, px, puv) -> float:
        if self.aux_vanishes:
            return 0.0
        return self.aux.value(self.joint_aux(px, puv))

    def value(self, px, puv) -> float:
        return self.value_main(px) + self.value_aux(px, puv)

    def grad_px(self, px, puv):
        G = self.main.grad(self.joint_main(px)).reshape(self.q.shape)
        g = np.einsum("xyzt,xyzt->x", self.q, G)
        if not self.aux_vanishes:
            G2 = self.aux.grad(self.joint_aux(px, puv)).reshape(self.nz * self.nt, -1)
            qg = (self.q2 @ G2).reshape(self.nx, self.ny, -1)
            g = g + np.sum(qg * puv.reshape(self.nx, self.ny, -1), axis=(1, 2))
        return g

    def grad_puv(self, px, puv):
        if self.aux_vanishes:
            return np.zeros_like(puv)
        G2 = self.aux.grad(self.joint_aux(px, puv)).reshape(self.nz * self.nt, -1)
        return (self._pq(px) @ G2).reshape(puv.shape)


def _flat_inputs(px, puv, prob: _VProblem):
    if isinstance(px, JointDist):
        px = px.probs
    if isinstance(puv, Channel):
        puv = puv.probs
    px = np.asarray(px, dtype=float).reshape(prob.nx)
    puv = np.asarray(puv, dtype=float).reshape(prob.nx, prob.ny, prob.nu * prob.nv)
    return px, puv


def _problem_for(px, chT: Channel, puv, fp) -> _VProblem:
    if isinstance(puv, Channel):
        nu, nv = puv.out_shape
    else:
        nu, nv = np.shape(puv)[-2:]
    return _VProblem(chT, fp, nu, nv)


def v_objective(px, chT: Channel, puv, fp: FractionalPartition, r: int | None = None) -> float:
    """Objective of V_lambda at one (p(x), p(u,v|x,y)) via the exact joint.

    ``chT`` maps X1..Xk to (Y1..Yk, Z, T); ``puv`` is a Channel from
    (X1..Xk, Y1..Yk) to (U, V) or an array of that shape.
    """
    require_valid(fp)
    if r is not None and not admissible_for_keyset(fp, r):
        raise ValueError(f"lambda puts weight on a subset containing the key set 1..{r}")
    k = fp.k
    if len(chT.in_vars) != k or len(chT.out_vars) != k + 2:
        raise ValueError("channel must map X1..Xk to (Y1..Yk, Z, T)")
    xs = [f"X{i}" for i in range(1, k + 1)]
    ys = [f"Y{i}" for i in range(1, k + 1)]
    ch = Channel([VarSpec(n, v.card) for n, v in zip(xs, chT.in_vars)],
                 [VarSpec(n, v.card) for n, v in zip(ys + ["Z", "T"], chT.out_vars)], chT.probs)
    pxa = px.probs if isinstance(px, JointDist) else np.asarray(px, dtype=float)
    pxd = JointDist([VarSpec(n, c) for n, c in zip(xs, ch.in_shape)], pxa.reshape(ch.in_shape))
    if isinstance(puv, Channel):
        puv = puv.probs
    puv = np.asarray(puv, dtype=float)
    nu, nv = puv.shape[-2:]
    puv = puv.reshape(ch.in_shape + ch.out_shape[:k] + (nu, nv))
    uv = Channel(ch.in_vars + ch.out_vars[:k], [VarSpec("U", nu), VarSpec("V", nv)], puv)
    d = push_through(push_through(pxd, ch), uv)
    val = i_lambda(d, list(zip(xs, ys)), fp, ("T",)) - i_lambda(d, [(x,) for x in xs], fp)
    val += cond_mutual_info(d, "V", "T", "U") - cond_mutual_info(d, "V", "Z", "U")
    return val


def v_objective_grad(px, chT: Channel, puv, fp: FractionalPartition):
    """Analytic gradients (d/dp(x), d/dp(u,v|x,y)) of :func:`v_objective`.

    Returned with the input shapes; the px gradient treats the entries of
    p(x) as free coordinates.
    """
    prob = _problem_for(px, chT, puv, fp)
    pxf, puvf = _flat_inputs(px, puv, prob)
    gx = prob.grad_px(pxf, puvf).reshape(prob.xshape)
    guv = prob.grad_puv(pxf, puvf).reshape(prob.xshape + prob.yshape + (prob.nu, prob.nv))
    return gx, guv


# ---------------------------------------------------------------- maximization

@dataclass
class VResult:
    value: float
    px: np.ndarray
    puv: np.ndarray
    converged: bool
    mode: str


def _default_cards(chT: Channel, cfg: OptimizerConfig):
    nx = math.prod(chT.in_shape)
    return (cfg.card_u or nx + 1), (cfg.card_v or nx + 1)


def _inner_puv(prob: _VProblem, px, starts, cfg) -> tuple[float, np.ndarray, bool]:
    """Maximize the U,V term for fixed p(x)."""
    if prob.aux_vanishes:
        return 0.0, starts[0], True
    best = (-math.inf, None, True)
    for s in starts:
        res = _ascent.projected_ascent(lambda w: prob.value_aux(px, w),
                                       lambda w: prob.grad_puv(px, w), s,
                                       step=cfg.step_init, tol=cfg.tol, max_iters=cfg.max_iters)
        if res.value > best[0]:
            best = (res.value, res.x, res.converged)
    return best


def _random_puv(rng, prob):
    return _ascent.project_simplex(rng.dirichlet(np.ones(prob.nu * prob.nv), size=(prob.nx, prob.ny)))


def _heuristic(prob: _VProblem, cfg: OptimizerConfig, channel_id: int) -> VResult:
    best = None
    for s in range(cfg.restarts):
        rng = _ascent.seed_rng(cfg.master_seed, channel_id, s)
        px = rng.dirichlet(np.ones(prob.nx))
        puv = _random_puv(rng, prob)
        fx = prob.value(px, puv)
        converged = False
        for _ in range(cfg.max_iters):
            r1 = _ascent.projected_ascent(lambda p: prob.value(p, puv), lambda p: prob.grad_px(p, puv),
                                          px, step=cfg.step_init, tol=cfg.tol, max_iters=20)
            px = r1.x
            if not prob.aux_vanishes:
                r2 = _ascent.projected_ascent(lambda w: prob.value(px, w), lambda w: prob.grad_puv(px, w),
                                              puv, step=cfg.step_init, tol=cfg.tol, max_iters=20)
                puv = r2.x
            f_new = prob.value(px, puv)
            gain, fx = f_new - fx, f_new
            if gain < cfg.tol:
                converged = True
                break
        cand = VResult(fx, px, puv, converged, "heuristic")
        if best is None or cand.value > best.value:
            best = cand
    return best


def _grid(prob: _VProblem, cfg: OptimizerConfig, channel_id: int) -> VResult:
    pts = _ascent.simplex_grid(prob.nx, cfg.grid_res)
    rng = _ascent.seed_rng(cfg.master_seed, channel_id, 10**6)
    starts = [_random_puv(rng, prob) for _ in range(cfg.restarts)]
    best = None
    for px in pts:
        inner, puv, conv = _inner_puv(prob, px, starts, cfg)
        val = prob.value_main(px) + inner
        if best is None or val > best.value:
            best = VResult(val, px, puv, conv, "grid")
    return best


def v_lambda(ch: Channel, aux: Channel | str, fp: FractionalPartition,
             cfg: OptimizerConfig = OptimizerConfig(), channel_id: int = 0) -> VResult:
    """Lower estimate of V_lambda for one channel with auxiliary receiver ``aux``.

    Grid mode (``cfg.grid_res`` set) scans p(x) on a simplex grid and runs
    the U,V ascent from fixed starts at each grid point; otherwise
    alternating projected ascent from ``cfg.restarts`` random points.
    """
    chT = attach_receiver(ch, aux)
    nu, nv = _default_cards(chT, cfg)
    prob = _VProblem(chT, fp, nu, nv)
    if cfg.grid_res is not None:
        res = _grid(prob, cfg, channel_id)
    else:
        res = _heuristic(prob, cfg, channel_id)
    res.px = res.px.reshape(prob.xshape)
    res.puv = res.puv.reshape(prob.xshape + prob.yshape + (prob.nu, prob.nv))
    return res


# ---------------------------------------------------------------- system bound

@dataclass
class WiMWCSystem:
    """Main channel plus parallel channels used at relative rates alpha."""

    k: int
    r: int
    main: Channel
    parallels: list[tuple[Channel, float]] = field(default_factory=list)

    def __post_init__(self):
        if not 1 <= self.r <= self.k:
            raise ValueError(f"r={self.r} must lie in 1..{self.k}")
        for i, ch in enumerate(self.channels()):
            _canonical(ch, self.k)
        for i, (_, a) in enumerate(self.parallels, 1):
            if not a >= 0:
                raise ValueError(f"parallel channel {i}: alpha must be nonnegative")

    def channels(self) -> list[Channel]:
        return [self.main] + [ch for ch, _ in self.parallels]

    def weights(self) -> list[float]:
        return [1.0] + [float(a) for _, a in self.parallels]


def system_from_json(doc: dict) -> WiMWCSystem:
    try:
        k, r = int(doc["k"]), int(doc["r"])
        main = channel_from_json(doc["main"])
        pars = [(channel_from_json(p["channel"]), float(p["alpha"])) for p in doc.get("parallels", [])]
    except KeyError as e:
        raise ValueError(f"system file: missing field {e}") from None
    return WiMWCSystem(k, r, main, pars)


def system_to_json(sys_: WiMWCSystem) -> dict:
    return {"k": sys_.k, "r": sys_.r, "main": channel_to_json(sys_.main),
            "parallels": [{"channel": channel_to_json(c), "alpha": a} for c, a in sys_.parallels]}


@dataclass
class ChannelBound:
    channel_id: int
    alpha: float
    value: float
    px: np.ndarray
    puv: np.ndarray
    converged: bool


@dataclass
class BoundReport:
    value: float
    per_channel: list[ChannelBound]
    mode: str
    certified: bool = False

    def recomputed(self) -> float:
        v = 0.0
        for cb in self.per_channel:
            v += cb.alpha * cb.value
        return v

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "mode": self.mode,
            "certified": self.certified,
            "per_channel": [{
                "channel": "main" if cb.channel_id == 0 else f"parallel{cb.channel_id}",
                "alpha": cb.alpha, "V": cb.value, "converged": cb.converged,
                "argmax": {"px": cb.px.tolist(), "puv_shape": list(cb.puv.shape)},
            } for cb in self.per_channel],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def table(self) -> str:
        lines = [f"{'channel':<12}{'alpha':>12}{'V':>12}{'alpha*V':>12}  converged"]
        for cb in self.per_channel:
            name = "main" if cb.channel_id == 0 else f"parallel{cb.channel_id}"
            lines.append(f"{name:<12}{cb.alpha:>12.6f}{cb.value:>12.6f}{cb.alpha * cb.value:>12.6f}  {cb.converged}")
        tag = "certified" if self.certified else "uncertified"
        lines.append(f"bound = {self.value:.6f} bits ({self.mode}, {tag})")
        return "\n".join(lines)


def key_capacity_bound(sys_: WiMWCSystem, aux: Channel | str, fp: FractionalPartition,
                   cfg: OptimizerConfig = OptimizerConfig()) -> BoundReport:
    """V(main) + sum_l alpha_l V(parallel_l), all with the same auxiliary receiver."""
    require_valid(fp)
    if fp.k != sys_.k:
        raise ValueError(f"lambda is for k={fp.k}, system has k={sys_.k}")
    if not admissible_for_keyset(fp, sys_.r):
        raise ValueError(f"lambda puts weight on a subset containing the key set 1..{sys_.r}")
    per = []
    total = 0.0
    for cid, (ch, a) in enumerate(zip(sys_.channels(), sys_.weights())):
        res = v_lambda(ch, aux, fp, cfg, channel_id=cid)
        per.append(ChannelBound(cid, a, res.value, res.px, res.puv, res.converged))
        total += a * res.value
    mode = "grid" if cfg.grid_res is not None else "heuristic"
    return BoundReport(total, per, mode, certified=False)
