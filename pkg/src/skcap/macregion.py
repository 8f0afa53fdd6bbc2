"""Dependence-balance outer bound for two-user MACs with generalized feedback.

The channel is p(y, yf1, yf2 | x1, x2); transmitter i observes (Y, YF_i).
For a law p(t1, t2, x1, x2) the four rate bounds are

    a  = I(X1; Y, YF2 | X2, T1, T2)
    b  = I(X2; Y, YF1 | X1, T1, T2)
    s3 = I(X1, X2; Y, YF1, YF2 | T1, T2)
    s4 = I(X1, X2; Y | T1)

and p is admissible when

    (6a) I(X1; X2 | T1, T2) <= I(X1; X2 | Y, YF1, YF2, T1, T2)
    (6b) I(X1; X2 | T1)     <= I(X1, YF1; X2, YF2 | T1, Y).

The region is the union over admissible p of the pentagons
{R1 <= a, R2 <= b, R1 + R2 <= min(s3, s4)}, searched heuristically, so it
is an inner estimate of the outer bound (uncertified).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _ascent
from .dist import (
    Channel,
    JointDist,
    VarSpec,
    channel_from_json,
    cond_mutual_info,
    push_through,
)
from .keybound import OptimizerConfig

SLACK_TOL = 1e-9
CONTAIN_TOL = 1e-6
MERGE_TOL = CONTAIN_TOL / 2
N_DIRECTIONS = 33


class GenFeedbackMAC:
    """Two-user MAC with outputs (Y, YF1, YF2); a missing feedback part has card 1."""

    def __init__(self, channel: Channel):
        if len(channel.in_vars) != 2 or len(channel.out_vars) != 3:
            raise ValueError("MAC channel needs inputs (X1, X2) and outputs (Y, YF1, YF2)")
        names = ["X1", "X2", "Y", "YF1", "YF2"]
        vs = [VarSpec(n, v.card) for n, v in zip(names, channel.in_vars + channel.out_vars)]
        self.channel = Channel(vs[:2], vs[2:], channel.probs)

    @classmethod
    def from_function(cls, x_cards, out_cards, fn) -> "GenFeedbackMAC":
        """Deterministic MAC, ``fn(x1, x2) -> (y, yf1, yf2)``."""
        ins = [VarSpec("X1", x_cards[0]), VarSpec("X2", x_cards[1])]
        outs = [VarSpec(n, c) for n, c in zip(("Y", "YF1", "YF2"), out_cards)]
        return cls(Channel.deterministic(ins, outs, fn))

    @property
    def x_cards(self) -> tuple[int, int]:
        return self.channel.in_shape

    def t_caps(self) -> tuple[int, int]:
        return 5, self.x_cards[0] * self.x_cards[1] + 3


def mac_from_json(doc: dict) -> GenFeedbackMAC:
    ch = channel_from_json(doc)
    outs = ch.out_names
    if set(outs) == {"Y", "YF1", "YF2"}:
        order = [outs.index(n) for n in ("Y", "YF1", "YF2")]
        probs = np.transpose(ch.probs, [0, 1] + [2 + i for i in order])
        ch = Channel(ch.in_vars, [ch.out_vars[i] for i in order], probs)
    return GenFeedbackMAC(ch)


# ---------------------------------------------------------------- exact quantities

def _check_caps(p: JointDist, mac: GenFeedbackMAC):
    names = p.names
    if names != ("T1", "T2", "X1", "X2"):
        raise ValueError(f"expected a law over (T1, T2, X1, X2), got {names}")
    c1, c2 = mac.t_caps()
    if p.card("T1") > c1 or p.card("T2") > c2:
        raise ValueError(f"|T1| <= {c1} and |T2| <= {c2} required, got {p.card('T1')}, {p.card('T2')}")
    if (p.card("X1"), p.card("X2")) != mac.x_cards:
        raise ValueError("input alphabets do not match the MAC")


def full_joint(p: JointDist, mac: GenFeedbackMAC) -> JointDist:
    return push_through(p, mac.channel)


def rate_bounds(p: JointDist, mac: GenFeedbackMAC) -> dict[str, float]:
    """The four rate bounds a, b, s3, s4 at p(t1, t2, x1, x2)."""
    _check_caps(p, mac)
    d = full_joint(p, mac)
    return {
        "R1": cond_mutual_info(d, "X1", ("Y", "YF2"), ("X2", "T1", "T2")),
        "R2": cond_mutual_info(d, "X2", ("Y", "YF1"), ("X1", "T1", "T2")),
        "sum_full": cond_mutual_info(d, ("X1", "X2"), ("Y", "YF1", "YF2"), ("T1", "T2")),
        "sum_y": cond_mutual_info(d, ("X1", "X2"), "Y", "T1"),
    }


def constraints_ok(p: JointDist, mac: GenFeedbackMAC) -> tuple[bool, float, float]:
    """(ok, slack of 6a, slack of 6b), slack = rhs - lhs."""
    _check_caps(p, mac)
    d = full_joint(p, mac)
    s6a = (cond_mutual_info(d, "X1", "X2", ("Y", "YF1", "YF2", "T1", "T2"))
           - cond_mutual_info(d, "X1", "X2", ("T1", "T2")))
    s6b = (cond_mutual_info(d, ("X1", "YF1"), ("X2", "YF2"), ("T1", "Y"))
           - cond_mutual_info(d, "X1", "X2", "T1"))
    return (s6a >= -SLACK_TOL and s6b >= -SLACK_TOL), s6a, s6b


# ---------------------------------------------------------------- fast problem

def _mi_terms(a, b, c):
    a, b, c = tuple(a), tuple(b), tuple(c)
    return [(1.0, a + c), (1.0, b + c), (-1.0, a + b + c), (-1.0, c)]


class _MACProblem:
    NAMES = ("T1", "T2", "X1", "X2", "Y", "YF1", "YF2")

    def __init__(self, mac: GenFeedbackMAC, nt1: int, nt2: int):
        self.mac, self.nt1, self.nt2 = mac, nt1, nt2
        self.pshape = (nt1, nt2) + mac.x_cards
        self.n = math.prod(self.pshape)
        self.W = mac.channel.probs
        self.shape = self.pshape + mac.channel.out_shape
        E = lambda terms: _ascent.EntropyExpr(self.NAMES, terms)
        self.exprs = {
            "R1": E(_mi_terms(["X1"], ["Y", "YF2"], ["X2", "T1", "T2"])),
            "R2": E(_mi_terms(["X2"], ["Y", "YF1"], ["X1", "T1", "T2"])),
            "sum_full": E(_mi_terms(["X1", "X2"], ["Y", "YF1", "YF2"], ["T1", "T2"])),
            "sum_y": E(_mi_terms(["X1", "X2"], ["Y"], ["T1"])),
            "c6a": E(_mi_terms(["X1"], ["X2"], ["Y", "YF1", "YF2", "T1", "T2"])
                     + [(-c, s) for c, s in _mi_terms(["X1"], ["X2"], ["T1", "T2"])]),
            "c6b": E(_mi_terms(["X1", "YF1"], ["X2", "YF2"], ["T1", "Y"])
                     + [(-c, s) for c, s in _mi_terms(["X1"], ["X2"], ["T1"])]),
        }

    def joint(self, p):
        return p.reshape(self.pshape)[..., None, None, None] * self.W[None, None]

    def values(self, p):
        P = self.joint(p)
        return {k: e.value(P) for k, e in self.exprs.items()}

    def grads(self, p, keys):
        P = self.joint(p)
        axes = tuple(range(4, 7))
        return {k: (self.exprs[k].grad(P) * self.W[None, None]).sum(axis=axes).ravel() for k in keys}


def _pentagon_point(v, mu):
    """Maximizer of mu R1 + (1-mu) R2 over {R1 <= a, R2 <= b, R1 + R2 <= s}."""
    a, b = max(v["R1"], 0.0), max(v["R2"], 0.0)
    s = max(min(v["sum_full"], v["sum_y"]), 0.0)
    if mu >= 0.5:
        r1 = min(a, s)
        r2 = min(b, s - r1)
    else:
        r2 = min(b, s)
        r1 = min(a, s - r2)
    return r1, r2


def _weighted(v, mu):
    r1, r2 = _pentagon_point(v, mu)
    return mu * r1 + (1 - mu) * r2


def _weighted_grad(prob, p, v, mu):
    """Subgradient of the weighted pentagon value via the active bounds."""
    a, b = v["R1"], v["R2"]
    s_key = "sum_full" if v["sum_full"] <= v["sum_y"] else "sum_y"
    s = v[s_key]
    # partials of (r1, r2) with respect to (a, b, s)
    if mu >= 0.5:
        dr1 = np.array([1.0, 0, 0]) if a <= s else np.array([0, 0, 1.0])
        dr2 = np.array([0, 1.0, 0]) if b <= s - min(a, s) else np.array([0, 0, 1.0]) - dr1
    else:
        dr2 = np.array([0, 1.0, 0]) if b <= s else np.array([0, 0, 1.0])
        dr1 = np.array([1.0, 0, 0]) if a <= s - min(b, s) else np.array([0, 0, 1.0]) - dr2
    w = mu * dr1 + (1 - mu) * dr2
    coeffs = {k: c for k, c in zip(("R1", "R2", s_key), w) if c != 0.0}
    if not coeffs:
        return np.zeros(prob.n)
    g = prob.grads(p, list(coeffs))
    return sum(c * g[k] for k, c in coeffs.items())


def _feasible(v, drop_6b):
    return v["c6a"] >= -SLACK_TOL and (drop_6b or v["c6b"] >= -SLACK_TOL)


def _score(v, mu):
    if mu is None:
        return max(min(v["R1"] + v["R2"], v["sum_full"], v["sum_y"]), 0.0)
    return _weighted(v, mu)


def _score_grad(prob, p, v, mu):
    if mu is not None:
        return _weighted_grad(prob, p, v, mu)
    cands = {"R12": v["R1"] + v["R2"], "sum_full": v["sum_full"], "sum_y": v["sum_y"]}
    key = min(cands, key=cands.get)
    if key == "R12":
        g = prob.grads(p, ["R1", "R2"])
        return g["R1"] + g["R2"]
    return prob.grads(p, [key])[key]


def _penalty_ascent(prob, p0, mu, drop_6b, cfg):
    """Projected subgradient ascent on score - c * violation with growing c.

    Returns the best admissible iterate seen (p, values) or None.
    """
    best = None
    p = _ascent.project_simplex(p0)
    v = prob.values(p)
    if _feasible(v, drop_6b):
        best = (_score(v, mu), p.copy(), v)
    c = 1.0
    step = cfg.step_init * 0.2
    for it in range(cfg.max_iters):
        g = _score_grad(prob, p, v, mu)
        keys = ["c6a"] + ([] if drop_6b else ["c6b"])
        active = [k for k in keys if v[k] < 0]
        if active:
            cg = prob.grads(p, active)
            for k in active:
                g = g + c * cg[k]
        p_new = _ascent.project_simplex(p + step * g / max(1.0, float(np.linalg.norm(g))))
        v_new = prob.values(p_new)
        if _feasible(v_new, drop_6b):
            sc = _score(v_new, mu)
            if best is None or sc > best[0]:
                best = (sc, p_new.copy(), v_new)
        if np.max(np.abs(p_new - p)) < cfg.tol:
            break
        p, v = p_new, v_new
        if it % 25 == 24:
            c *= 2.0
            step *= 0.7
    return best


def _product_starts(prob: _MACProblem, rng, count):
    """Independent inputs with constant T's: always admissible."""
    n1, n2 = prob.mac.x_cards
    out = []
    for s in range(count):
        a = np.full(n1, 1.0 / n1) if s == 0 else rng.dirichlet(np.ones(n1))
        b = np.full(n2, 1.0 / n2) if s == 0 else rng.dirichlet(np.ones(n2))
        p = np.zeros(prob.pshape)
        p[0, 0] = np.outer(a, b)
        out.append(p.ravel())
    return out


def _product_ascent(prob: _MACProblem, start, mu, cfg):
    """Ascent over product inputs with constant T's (stays admissible)."""
    n1, n2 = prob.mac.x_cards
    pr = start.reshape(prob.pshape)[0, 0]
    a, b = pr.sum(axis=1), pr.sum(axis=0)

    def pack(a, b):
        p = np.zeros(prob.pshape)
        p[0, 0] = np.outer(a, b)
        return p.ravel()

    for _ in range(2):
        for block in (0, 1):
            def f(x):
                return _score(prob.values(pack(x, b) if block == 0 else pack(a, x)), mu)

            def gfun(x):
                p = pack(x, b) if block == 0 else pack(a, x)
                g = _score_grad(prob, p, prob.values(p), mu).reshape(prob.pshape)[0, 0]
                return g @ b if block == 0 else a @ g

            res = _ascent.projected_ascent(f, gfun, a if block == 0 else b, step=cfg.step_init,
                                           tol=cfg.tol, max_iters=min(cfg.max_iters, 100))
            if block == 0:
                a = res.x
            else:
                b = res.x
    p = pack(a, b)
    return _score(prob.values(p), mu), p


@dataclass
class Candidate:
    p: np.ndarray  # (T1, T2, X1, X2)
    values: dict


def _search(mac: GenFeedbackMAC, cfg: OptimizerConfig, mu, drop_6b, tag: int) -> list[Candidate]:
    """Admissible candidates for one scalarization (mu=None: sum rate)."""
    c1, c2 = mac.t_caps()
    nt1 = min(cfg.card_t1 or c1, c1)
    nt2 = min(cfg.card_t2 or c2, c2)
    prob = _MACProblem(mac, nt1, nt2)
    rng = _ascent.seed_rng(cfg.master_seed, tag)
    cands = []
    for p in _product_starts(prob, rng, 2):
        _, pp = _product_ascent(prob, p, mu, cfg)
        cands.append(Candidate(pp.reshape(prob.pshape), prob.values(pp)))
    for s in range(cfg.restarts):
        p0 = rng.dirichlet(np.ones(prob.n))
        best = _penalty_ascent(prob, p0, mu, drop_6b, cfg)
        if best is not None:
            cands.append(Candidate(best[1].reshape(prob.pshape), best[2]))
    if cfg.grid_res is not None:
        grid_prob = _MACProblem(mac, 1, 1)
        for q in _ascent.simplex_grid(grid_prob.n, cfg.grid_res):
            v = grid_prob.values(q)
            if _feasible(v, drop_6b):
                cands.append(Candidate(q.reshape(grid_prob.pshape), v))
    return cands


def _best(cands, mu):
    best = None
    for i, c in enumerate(cands):
        sc = _score(c.values, mu)
        if best is None or sc > best[0]:
            best = (sc, i)
    return best


def _as_dist(p: np.ndarray) -> JointDist:
    return JointDist.from_array(("T1", "T2", "X1", "X2"), p / p.sum())


def outer_sum_rate(mac: GenFeedbackMAC, cfg: OptimizerConfig = OptimizerConfig(),
                   drop_6b: bool = False, return_witness: bool = False):
    """Largest R1 + R2 in the bound: max over admissible p of min(a + b, s3, s4)."""
    cands = _search(mac, cfg, None, drop_6b, tag=1000)
    if drop_6b:
        cands += _search(mac, cfg, None, False, tag=1000)
    val, i = _best(cands, None)
    w = cands[i]
    _, s6a, s6b = constraints_ok(_as_dist(w.p), mac)
    if s6a < -SLACK_TOL or (not drop_6b and s6b < -SLACK_TOL):
        raise RuntimeError("sum-rate witness failed re-verification")
    return (val, w) if return_witness else val


# ---------------------------------------------------------------- region

def _hull(points) -> list[tuple[float, float]]:
    """Counter-clockwise convex hull (monotone chain), collinear points dropped.

    Points closer than MERGE_TOL to an earlier one are merged; separate
    searches often land a few 1e-7 apart on the same optimum.
    """
    pts = []
    for p in sorted(set((round(x, 12), round(y, 12)) for x, y in points), key=lambda q: -(q[0] + q[1])):
        if all(math.hypot(p[0] - q[0], p[1] - q[1]) > MERGE_TOL for q in pts):
            pts.append(p)
    pts.sort()
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 1e-15:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 1e-15:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _pentagon(v):
    a, b = max(v["R1"], 0.0), max(v["R2"], 0.0)
    s = max(min(v["sum_full"], v["sum_y"]), 0.0)
    ra, rb = min(a, s), min(b, s)
    return [(0.0, 0.0), (ra, 0.0), (ra, min(b, s - ra)), (min(a, s - rb), rb), (0.0, rb)]


@dataclass
class OuterRegion:
    vertices: list[tuple[float, float]]
    sum_rate_max: float
    feasible_witnesses: list[np.ndarray] = field(default_factory=list)
    drop_6b: bool = False
    certified: bool = False

    def support(self, mu: float) -> float:
        return max(mu * x + (1 - mu) * y for x, y in self.vertices)

    def contains(self, point, tol: float = CONTAIN_TOL) -> bool:
        x, y = point
        if x < -tol or y < -tol:
            return False
        V = self.vertices
        if len(V) == 1:
            return abs(x - V[0][0]) <= tol and abs(y - V[0][1]) <= tol
        if len(V) == 2:
            (x0, y0), (x1, y1) = V
            d = np.array([x1 - x0, y1 - y0])
            t = np.clip(np.dot([x - x0, y - y0], d) / max(np.dot(d, d), 1e-300), 0, 1)
            return float(np.hypot(x0 + t * d[0] - x, y0 + t * d[1] - y)) <= tol
        for (x0, y0), (x1, y1) in zip(V, V[1:] + V[:1]):
            edge = math.hypot(x1 - x0, y1 - y0)
            if edge == 0:
                continue
            # inside of a CCW polygon is to the left of every edge
            if ((x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)) / edge < -tol:
                return False
        return True

    def contains_region(self, other: "OuterRegion", tol: float = CONTAIN_TOL) -> bool:
        return all(self.contains(v, tol) for v in other.vertices)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["R1", "R2"])
        for x, y in self.vertices:
            w.writerow([f"{x:.6f}", f"{y:.6f}"])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"vertices": [list(v) for v in self.vertices], "sum_rate_max": self.sum_rate_max,
                "drop_6b": self.drop_6b, "certified": self.certified,
                "witnesses": [w.tolist() for w in self.feasible_witnesses]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def outer_region(mac: GenFeedbackMAC, cfg: OptimizerConfig = OptimizerConfig(),
                 drop_6b: bool = False, directions: int = N_DIRECTIONS) -> OuterRegion:
    """Union of pentagons over admissible candidates from weighted-sum searches.

    With ``drop_6b`` the candidates of the constrained search are kept as
    well, since they stay admissible when a constraint is removed.
    """
    passes = [drop_6b] + ([False] if drop_6b else [])
    cands: list[Candidate] = []
    for d6 in passes:
        for i in range(directions):
            mu = i / (directions - 1) if directions > 1 else 0.5
            found = _search(mac, cfg, mu, d6, tag=i)
            best = _best(found, mu)
            if best is not None:
                cands.append(found[best[1]])
        _, w = outer_sum_rate(mac, cfg, drop_6b=d6, return_witness=True)
        cands.append(w)
    pts = [pt for c in cands for pt in _pentagon(c.values)]
    verts = _hull(pts)
    sum_max = max(min(c.values["R1"] + c.values["R2"], c.values["sum_full"], c.values["sum_y"])
                  for c in cands)
    return OuterRegion(verts, max(sum_max, 0.0), [c.p for c in cands], drop_6b)


def sum_rate_chain_sides(trace) -> tuple[float, float]:
    """I(W_[k]; Z^n) next to sum_j I(X_[k]j; Z_j | Z^(j-1)) on a simulated code.

    Messages are the W's and the receiver output plays the role of Z.
    """
    k, n = trace.k, trace.n
    ws = [f"W{i}" for i in range(1, k + 1)]
    zs = [f"Z_{j}" for j in range(1, n + 1)]
    lhs = cond_mutual_info(trace, ws, zs, ())
    rhs = sum(cond_mutual_info(trace, [f"X{i}_{j}" for i in range(1, k + 1)], f"Z_{j}", zs[:j - 1])
              for j in range(1, n + 1))
    return lhs, rhs
