"""Exact simulation of interactive codes and the dependence-balance inequality.

At step j terminal i sends X_ij = f_ij(W_i, Y_i1..Y_i(j-1)) into the
channel scheduled for that step; the channel returns Y_1j..Y_kj and the
eavesdropper output Z_j. An optional auxiliary receiver turns
(X_[k]j, Y_[k]j, Z_j) into T_j.

Traces are kept as exact support tables (one row per reachable outcome)
because the deterministic X axes make dense tensors needlessly large.
Variable names: W{i}, X{i}_{j}, Y{i}_{j}, Z_{j}, T_{j} (1-based).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dist import (
    MAX_CELLS,
    Channel,
    JointDist,
    SizeError,
    VarSpec,
    as_names,
    channel_from_json,
    cond_mutual_info,
    entropy_of_probs,
    random_channel,
)
from .fracpart import FractionalPartition
from .lambda_mi import i_lambda


@dataclass
class InteractiveCode:
    """Deterministic encoders driven by independent private randomness.

    ``encoders[i][j]`` is a flat lookup table for terminal i+1 at step j+1,
    indexed row-major by (w_i, y_i1, ..., y_ij-1).
    ``schedule[j]`` indexes the channel list passed to :func:`simulate_code`
    (0 is the main channel by convention).
    """

    k: int
    n: int
    w_probs: list[np.ndarray]
    encoders: list[list[np.ndarray]]
    schedule: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ValueError("need k >= 1 terminals and n >= 1 steps")
        if not self.schedule:
            self.schedule = [0] * self.n
        if len(self.schedule) != self.n:
            raise ValueError(f"schedule has {len(self.schedule)} entries for n={self.n}")
        if len(self.w_probs) != self.k or len(self.encoders) != self.k:
            raise ValueError("need one randomness distribution and one encoder row per terminal")
        self.w_probs = [np.asarray(w, dtype=float) for w in self.w_probs]
        for i, w in enumerate(self.w_probs, 1):
            if w.ndim != 1 or np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
                raise ValueError(f"W{i}: not a probability vector")
        for i, row in enumerate(self.encoders, 1):
            if len(row) != self.n:
                raise ValueError(f"terminal {i}: {len(row)} encoders for n={self.n}")
        self.encoders = [[np.asarray(t, dtype=np.int64) for t in row] for row in self.encoders]

    @property
    def w_cards(self) -> list[int]:
        return [len(w) for w in self.w_probs]


def _step_channel(ch: Channel, k: int, j: int) -> Channel:
    if len(ch.in_vars) != k or len(ch.out_vars) != k + 1:
        raise ValueError(f"step {j}: channel must have {k} inputs and {k + 1} outputs (Y1..Yk, Z)")
    return ch


class TraceDist:
    """Exact joint law of a code run, stored as support rows and masses."""

    def __init__(self, vars_: Sequence[VarSpec], rows: np.ndarray, probs: np.ndarray, k: int, n: int,
                 has_t: bool):
        self.vars = tuple(vars_)
        self.rows = rows
        self.rows.setflags(write=False)
        self.p = probs
        self.p.setflags(write=False)
        self.k, self.n, self.has_t = k, n, has_t
        self._col = {v.name: i for i, v in enumerate(self.vars)}
        self._h: dict[frozenset, float] = {}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.vars)

    def axis(self, name: str) -> int:
        try:
            return self._col[name]
        except KeyError:
            raise ValueError(f"unknown variable {name!r}") from None

    def entropy(self, names) -> float:
        names = as_names(names)
        if not names:
            return 0.0
        key = frozenset(names)
        if key not in self._h:
            cols = sorted(self.axis(n) for n in key)
            codes = np.zeros(len(self.p), dtype=np.int64)
            for c in cols:
                codes = codes * self.vars[c].card + self.rows[:, c]
            span = math.prod(self.vars[c].card for c in cols)
            if span <= 4 * len(self.p) + 1024:
                counts = np.bincount(codes, weights=self.p, minlength=span)
            else:
                _, inv = np.unique(codes, return_inverse=True)
                counts = np.bincount(inv.ravel(), weights=self.p)
            self._h[key] = entropy_of_probs(counts)
        return self._h[key]

    def to_joint(self) -> JointDist:
        """Dense version (subject to the cell cap)."""
        shape = tuple(v.card for v in self.vars)
        if math.prod(shape) > MAX_CELLS:
            raise SizeError(f"dense trace would have {math.prod(shape)} cells")
        dense = np.zeros(shape)
        np.add.at(dense, tuple(self.rows.T), self.p)
        return JointDist(self.vars, dense)


def simulate_code(code: InteractiveCode, channels: Sequence[Channel] | Channel,
                  aux: Channel | None = None) -> TraceDist:
    """Exact forward recursion over all (w, channel outcome) branches.

    ``aux`` reads (X1..Xk, Y1..Yk, Z) of the current step (by position) and
    emits T_j; when given it must fit every scheduled channel.
    """
    if isinstance(channels, Channel):
        channels = [channels]
    k, n = code.k, code.n
    vars_: list[VarSpec] = []
    # start: product of private randomness
    grids = np.meshgrid(*[np.arange(c) for c in code.w_cards], indexing="ij")
    rows = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    p = np.ones(len(rows))
    for i, w in enumerate(code.w_probs):
        p = p * w[rows[:, i]]
    vars_ += [VarSpec(f"W{i}", c) for i, c in enumerate(code.w_cards, 1)]
    keep = p > 0
    rows, p = rows[keep], p[keep]
    ycols: list[list[int]] = [[] for _ in range(k)]
    ycards: list[list[int]] = [[] for _ in range(k)]

    for j in range(1, n + 1):
        sid = code.schedule[j - 1]
        if not 0 <= sid < len(channels):
            raise ValueError(f"step {j}: schedule refers to channel {sid}, only {len(channels)} given")
        ch = _step_channel(channels[sid], k, j)
        xcards = ch.in_shape
        # inputs
        xs = []
        for i in range(k):
            table = code.encoders[i][j - 1]
            dims = [code.w_cards[i]] + ycards[i]
            if table.size != math.prod(dims):
                raise ValueError(f"encoder ({i + 1},{j}): table has {table.size} entries, "
                                 f"expected {math.prod(dims)} for domain {dims}")
            if table.size and (table.min() < 0 or table.max() >= xcards[i]):
                raise ValueError(f"encoder ({i + 1},{j}): outputs outside the alphabet of size {xcards[i]}")
            idx = rows[:, i]
            for col, card in zip(ycols[i], ycards[i]):
                idx = idx * card + rows[:, col]
            xs.append(table[idx])
        xs = np.stack(xs, axis=1)
        base = len(vars_)
        vars_ += [VarSpec(f"X{i}_{j}", c) for i, c in enumerate(xcards, 1)]
        # outputs: branch on every output tuple with positive probability
        mat = ch.matrix()
        xflat = np.ravel_multi_index(tuple(xs.T), xcards) if k else np.zeros(len(rows), dtype=np.int64)
        trans = mat[xflat]  # (rows, n_out)
        r_idx, o_idx = np.nonzero(trans > 0)
        outs = np.stack(np.unravel_index(o_idx, ch.out_shape), axis=1)
        new_rows = np.concatenate([rows[r_idx], xs[r_idx], outs], axis=1)
        new_p = p[r_idx] * trans[r_idx, o_idx]
        for i in range(k):
            ycols[i].append(base + k + i)
            ycards[i].append(ch.out_shape[i])
        vars_ += [VarSpec(f"Y{i}_{j}", c) for i, c in enumerate(ch.out_shape[:k], 1)]
        vars_.append(VarSpec(f"Z_{j}", ch.out_shape[k]))
        rows, p = new_rows, new_p
        if aux is not None:
            if aux.in_shape != xcards + ch.out_shape or len(aux.out_vars) != 1:
                raise ValueError(f"step {j}: auxiliary receiver does not fit the scheduled channel")
            step_cols = rows[:, base:base + 2 * k + 1]
            flat = np.ravel_multi_index(tuple(step_cols.T), aux.in_shape)
            tm = aux.matrix()[flat]
            r_idx, t_idx = np.nonzero(tm > 0)
            rows = np.concatenate([rows[r_idx], t_idx[:, None]], axis=1)
            p = p[r_idx] * tm[r_idx, t_idx]
            vars_.append(VarSpec(f"T_{j}", aux.out_shape[0]))
        if len(rows) > MAX_CELLS:
            raise SizeError(f"trace support has {len(rows)} outcomes, above the cap of {MAX_CELLS}")
    return TraceDist(vars_, rows, p / p.sum(), k, n, aux is not None)


def memoryless_gaps(trace: TraceDist) -> list[float]:
    """I(outputs_j ; past | X_[k]j) for each step; zero for a memoryless channel."""
    k = trace.k
    gaps = []
    for j in range(1, trace.n + 1):
        outs = [f"Y{i}_{j}" for i in range(1, k + 1)] + [f"Z_{j}"]
        if trace.has_t:
            outs.append(f"T_{j}")
        xj = [f"X{i}_{j}" for i in range(1, k + 1)]
        past = [f"W{i}" for i in range(1, k + 1)]
        for jj in range(1, j):
            past += [f"X{i}_{jj}" for i in range(1, k + 1)] + [f"Y{i}_{jj}" for i in range(1, k + 1)]
            past += [f"Z_{jj}"] + ([f"T_{jj}"] if trace.has_t else [])
        gaps.append(cond_mutual_info(trace, outs, past, xj))
    return gaps


def dependence_balance_sides(trace: TraceDist, fp: FractionalPartition, cond_name: str = "Z") -> tuple[float, float]:
    """Both sides of the dependence-balance inequality lhs <= rhs.

    lhs = I_l(W_1 Y_1^n; ...; W_k Y_k^n | C^n) - I_l(W_1; ...; W_k)
    rhs = sum_j I_l(X_1j Y_1j; ...; X_kj Y_kj | C^j) - I_l(X_1j; ...; X_kj | C^(j-1))
    with C the eavesdropper output Z or the auxiliary output T.
    """
    if cond_name not in ("Z", "T"):
        raise ValueError("cond_name must be 'Z' or 'T'")
    if cond_name == "T" and not trace.has_t:
        raise ValueError("trace has no auxiliary T axes")
    k, n = trace.k, trace.n
    if fp.k != k:
        raise ValueError(f"lambda is for k={fp.k}, trace has k={k}")
    cs = [f"{cond_name}_{j}" for j in range(1, n + 1)]
    groups = [[f"W{i}"] + [f"Y{i}_{j}" for j in range(1, n + 1)] for i in range(1, k + 1)]
    lhs = i_lambda(trace, groups, fp, cs) - i_lambda(trace, [[f"W{i}"] for i in range(1, k + 1)], fp)
    rhs = 0.0
    for j in range(1, n + 1):
        xy = [[f"X{i}_{j}", f"Y{i}_{j}"] for i in range(1, k + 1)]
        x = [[f"X{i}_{j}"] for i in range(1, k + 1)]
        rhs += i_lambda(trace, xy, fp, cs[:j]) - i_lambda(trace, x, fp, cs[:j - 1])
    return lhs, rhs


def w_dependence(trace: TraceDist, fp: FractionalPartition) -> float:
    """I_lambda(W_1; ...; W_k); zero because the W's are drawn independently."""
    return i_lambda(trace, [[f"W{i}"] for i in range(1, trace.k + 1)], fp)


# ---------------------------------------------------------------- random codes & I/O

def random_code(rng: np.random.Generator, k: int, n: int, w_card: int = 2,
                y_cards: Sequence[int] | None = None, x_cards: Sequence[int] | None = None,
                schedule: Sequence[int] | None = None) -> InteractiveCode:
    """Code with uniformly random lookup tables and random randomness laws."""
    x_cards = list(x_cards or [2] * k)
    y_cards = list(y_cards or [2] * k)
    w_probs = [rng.dirichlet(np.ones(w_card)) for _ in range(k)]
    encoders = []
    for i in range(k):
        row = []
        for j in range(n):
            size = w_card * y_cards[i] ** j
            row.append(rng.integers(0, x_cards[i], size=size))
        encoders.append(row)
    schedule = [0] * n if schedule is None else [int(s) for s in schedule]
    return InteractiveCode(k, n, w_probs, encoders, schedule)


def binary_step_channel(rng: np.random.Generator, k: int, z_card: int = 2) -> Channel:
    ins = [VarSpec(f"X{i}", 2) for i in range(1, k + 1)]
    outs = [VarSpec(f"Y{i}", 2) for i in range(1, k + 1)] + [VarSpec("Z", z_card)]
    return random_channel(rng, ins, outs, alpha=0.5)


def code_from_json(doc: dict) -> tuple[InteractiveCode, list[Channel]]:
    """Code spec: {"k", "n", "w_cards", optional "w_probs", "encoders", "schedule", "channels"}."""
    try:
        k, n = int(doc["k"]), int(doc["n"])
        cards = [int(c) for c in doc["w_cards"]]
        w_probs = doc.get("w_probs") or [[1.0 / c] * c for c in cards]
        enc = doc["encoders"]
        if isinstance(enc, dict):  # {"i,j": table}
            enc = [[enc[f"{i},{j}"] for j in range(1, n + 1)] for i in range(1, k + 1)]
        schedule = [int(s) for s in doc.get("schedule", [0] * n)]
        channels = [channel_from_json(c) for c in doc.get("channels", [])]
    except KeyError as e:
        raise ValueError(f"code file: missing field {e}") from None
    if [len(w) for w in w_probs] != cards:
        raise ValueError("code file: w_probs lengths do not match w_cards")
    return InteractiveCode(k, n, w_probs, enc, schedule), channels
