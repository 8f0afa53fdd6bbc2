"""Exact discrete distributions, channels and Shannon measures (bits).

Distributions are dense numpy tensors with one axis per named variable.
Everything here is immutable after construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_CELLS = 2**24
NEG_CLAMP = 1e-12
MASS_TOL = 1e-9
FILE_TOL = 1e-6


class SizeError(ValueError):
    """State space larger than the dense-tensor cap."""


@dataclass(frozen=True)
class VarSpec:
    name: str
    card: int

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValueError(f"bad variable name {self.name!r}")
        if int(self.card) != self.card or self.card < 1:
            raise ValueError(f"variable {self.name!r}: cardinality must be a positive integer")


def as_names(names: str | Iterable[str]) -> tuple[str, ...]:
    """Accept a single name or an iterable of names; keep order, drop duplicates."""
    if isinstance(names, str):
        return (names,)
    out = []
    for n in names:
        if n not in out:
            out.append(n)
    return tuple(out)


def _check_unique(vars_: Sequence[VarSpec]):
    seen = set()
    for v in vars_:
        if v.name in seen:
            raise ValueError(f"duplicate variable name {v.name!r}")
        seen.add(v.name)


def _check_cells(shape):
    cells = math.prod(shape)
    if cells > MAX_CELLS:
        raise SizeError(f"{cells} cells exceeds the cap of {MAX_CELLS}")


def entropy_of_probs(p: np.ndarray) -> float:
    """-sum p log2 p with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float).ravel()
    nz = p[p > 0]
    if nz.size == 0:
        return 0.0
    return float(-np.sum(nz * np.log2(nz)))


class JointDist:
    """Joint pmf over an ordered list of named discrete variables."""

    def __init__(self, vars_: Sequence[VarSpec], probs):
        vars_ = tuple(vars_)
        if not vars_:
            raise ValueError("a JointDist needs at least one variable")
        _check_unique(vars_)
        shape = tuple(v.card for v in vars_)
        _check_cells(shape)
        p = np.array(probs, dtype=float)
        if p.shape != shape:
            raise ValueError(f"probs shape {p.shape} does not match cardinalities {shape}")
        if np.any(p < -NEG_CLAMP) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and nonnegative")
        p[p < 0] = 0.0
        total = p.sum()
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {total!r} is not 1")
        p.setflags(write=False)
        self.vars = vars_
        self.probs = p
        self._axis = {v.name: i for i, v in enumerate(vars_)}

    @classmethod
    def from_array(cls, names: Sequence[str], probs) -> "JointDist":
        probs = np.asarray(probs, dtype=float)
        return cls([VarSpec(n, c) for n, c in zip(names, probs.shape)], probs)

    @classmethod
    def uniform(cls, vars_: Sequence[VarSpec]) -> "JointDist":
        shape = tuple(v.card for v in vars_)
        return cls(vars_, np.full(shape, 1.0 / math.prod(shape)))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.vars)

    def card(self, name: str) -> int:
        return self.vars[self.axis(name)].card

    def axis(self, name: str) -> int:
        try:
            return self._axis[name]
        except KeyError:
            raise ValueError(f"unknown variable {name!r}") from None

    def marginal_probs(self, keep: Iterable[str]) -> np.ndarray:
        """Marginal tensor with axes in the order given by ``keep``."""
        keep = as_names(keep)
        axes = [self.axis(n) for n in keep]
        drop = tuple(i for i in range(len(self.vars)) if i not in axes)
        m = self.probs.sum(axis=drop) if drop else self.probs
        # remaining axes are in ascending original order
        order = sorted(axes)
        return np.transpose(m, [order.index(a) for a in axes])

    def entropy(self, names: Iterable[str]) -> float:
        names = as_names(names)
        if not names:
            return 0.0
        return entropy_of_probs(self.marginal_probs(names))

    def __repr__(self):
        inner = ", ".join(f"{v.name}:{v.card}" for v in self.vars)
        return f"JointDist({inner})"


class Channel:
    """Conditional pmf p(out | in); ``probs`` axes are (inputs..., outputs...)."""

    def __init__(self, in_vars: Sequence[VarSpec], out_vars: Sequence[VarSpec], probs):
        in_vars, out_vars = tuple(in_vars), tuple(out_vars)
        if not out_vars:
            raise ValueError("a channel needs at least one output variable")
        _check_unique(in_vars + out_vars)
        shape = tuple(v.card for v in in_vars + out_vars)
        _check_cells(shape)
        p = np.array(probs, dtype=float)
        if p.shape != shape:
            raise ValueError(f"probs shape {p.shape} does not match cardinalities {shape}")
        if np.any(p < -NEG_CLAMP) or not np.all(np.isfinite(p)):
            raise ValueError("transition probabilities must be finite and nonnegative")
        p[p < 0] = 0.0
        rows = p.reshape(math.prod(v.card for v in in_vars), -1).sum(axis=1)
        bad = np.flatnonzero(np.abs(rows - 1.0) > MASS_TOL)
        if bad.size:
            raise ValueError(f"input slice {int(bad[0])} sums to {rows[bad[0]]!r}, not 1")
        p.setflags(write=False)
        self.in_vars = in_vars
        self.out_vars = out_vars
        self.probs = p

    @property
    def in_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.in_vars)

    @property
    def out_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.out_vars)

    @property
    def in_shape(self) -> tuple[int, ...]:
        return tuple(v.card for v in self.in_vars)

    @property
    def out_shape(self) -> tuple[int, ...]:
        return tuple(v.card for v in self.out_vars)

    def matrix(self) -> np.ndarray:
        """Row-stochastic matrix: flat input index x flat output index."""
        return self.probs.reshape(math.prod(self.in_shape), math.prod(self.out_shape))

    @classmethod
    def deterministic(cls, in_vars, out_vars, fn) -> "Channel":
        """Channel where ``fn(*inputs)`` returns the tuple (or int) of outputs."""
        in_vars, out_vars = tuple(in_vars), tuple(out_vars)
        p = np.zeros(tuple(v.card for v in in_vars + out_vars))
        for x in np.ndindex(*(v.card for v in in_vars)):
            y = fn(*x)
            if not isinstance(y, tuple):
                y = (y,)
            p[x + tuple(int(c) for c in y)] = 1.0
        return cls(in_vars, out_vars, p)

    def renamed(self, mapping: dict[str, str]) -> "Channel":
        ren = lambda vs: [VarSpec(mapping.get(v.name, v.name), v.card) for v in vs]
        return Channel(ren(self.in_vars), ren(self.out_vars), self.probs)

    def __repr__(self):
        ins = ",".join(self.in_names)
        outs = ",".join(self.out_names)
        return f"Channel({outs} | {ins})"


def _dist(d) -> JointDist:
    if not isinstance(d, JointDist):
        raise TypeError("expected a JointDist")
    return d


def entropy(d: JointDist, subset: str | Iterable[str]) -> float:
    names = as_names(subset)
    if not names:
        raise ValueError("entropy of an empty variable set")
    return d.entropy(names)


def _disjoint(**sets):
    items = list(sets.items())
    for i, (na, a) in enumerate(items):
        for nb, b in items[i + 1:]:
            common = set(a) & set(b)
            if common:
                raise ValueError(f"{na} and {nb} overlap on {sorted(common)}")


def cond_entropy(d, a, b=()) -> float:
    """H(A|B) = H(A u B) - H(B)."""
    a, b = as_names(a), as_names(b)
    if not a:
        raise ValueError("A must be nonempty")
    _disjoint(A=a, B=b)
    return d.entropy(a + b) - d.entropy(b)


def mutual_info(d, a, b) -> float:
    return cond_mutual_info(d, a, b, ())


def cond_mutual_info(d, a, b, c=()) -> float:
    """I(A;B|C) = H(A|C) - H(A|B,C)."""
    a, b, c = as_names(a), as_names(b), as_names(c)
    if not a or not b:
        raise ValueError("A and B must be nonempty")
    _disjoint(A=a, B=b, C=c)
    return d.entropy(a + c) + d.entropy(b + c) - d.entropy(a + b + c) - d.entropy(c)


def marginalize(d: JointDist, keep: str | Iterable[str]) -> JointDist:
    keep = as_names(keep)
    if not keep:
        raise ValueError("keep must name at least one variable")
    # keep original variable order
    ordered = [v for v in d.vars if v.name in keep]
    missing = set(keep) - {v.name for v in ordered}
    if missing:
        raise ValueError(f"unknown variables {sorted(missing)}")
    return JointDist(ordered, d.marginal_probs([v.name for v in ordered]))


def push_through(d: JointDist, ch: Channel) -> JointDist:
    """Joint of ``d`` and the channel outputs: p(v) * ch(out | in)."""
    names = d.names
    for n in ch.in_names:
        if n not in names:
            raise ValueError(f"channel input {n!r} is not a variable of the distribution")
        if d.card(n) != ch.in_vars[ch.in_names.index(n)].card:
            raise ValueError(f"cardinality mismatch on channel input {n!r}")
    clash = set(ch.out_names) & set(names)
    if clash:
        raise ValueError(f"channel outputs collide with existing variables {sorted(clash)}")
    m = len(names)
    in_labels = [names.index(n) for n in ch.in_names]
    out_labels = list(range(m, m + len(ch.out_vars)))
    probs = np.einsum(d.probs, list(range(m)), ch.probs, in_labels + out_labels,
                      list(range(m)) + out_labels)
    return JointDist(d.vars + ch.out_vars, probs)


def binary_entropy(eps: float) -> float:
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps={eps!r} is outside [0, 1]")
    if eps == 0.0 or eps == 1.0:
        return 0.0
    return float(-eps * math.log2(eps) - (1 - eps) * math.log2(1 - eps))


def product(*dists: JointDist) -> JointDist:
    """Independent product of distributions over disjoint variables."""
    vars_, p = (), np.ones(())
    for d in dists:
        vars_ += d.vars
        p = np.multiply.outer(p, d.probs)
    return JointDist(vars_, p)


# ---------------------------------------------------------------- random

def random_simplex(rng: np.random.Generator, shape, alpha=1.0) -> np.ndarray:
    """Dirichlet draws along the last axis."""
    shape = tuple(shape)
    g = rng.gamma(alpha, size=shape)
    g = np.maximum(g, 1e-300)
    return g / g.sum(axis=-1, keepdims=True)


def random_joint(rng: np.random.Generator, vars_: Sequence[VarSpec], alpha=1.0) -> JointDist:
    vars_ = tuple(vars_)
    shape = tuple(v.card for v in vars_)
    p = random_simplex(rng, (math.prod(shape),), alpha).reshape(shape)
    return JointDist(vars_, p)


def random_channel(rng: np.random.Generator, in_vars, out_vars, alpha=1.0) -> Channel:
    in_vars, out_vars = tuple(in_vars), tuple(out_vars)
    ni = math.prod(v.card for v in in_vars)
    no = math.prod(v.card for v in out_vars)
    p = random_simplex(rng, (ni, no), alpha)
    return Channel(in_vars, out_vars, p.reshape(tuple(v.card for v in in_vars + out_vars)))


# ---------------------------------------------------------------- JSON

def _vars_from_json(items, field) -> list[VarSpec]:
    if not isinstance(items, list):
        raise ValueError(f"{field}: expected a list of {{'name', 'card'}} objects")
    out = []
    for i, it in enumerate(items):
        try:
            out.append(VarSpec(str(it["name"]), int(it["card"])))
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError(f"{field}[{i}]: {e}") from None
    return out


def _vars_to_json(vars_):
    return [{"name": v.name, "card": v.card} for v in vars_]


def _probs_from_json(raw, shape, field) -> np.ndarray:
    try:
        p = np.array(raw, dtype=float)
    except (TypeError, ValueError) as e:
        raise ValueError(f"{field}: {e}") from None
    if p.shape != tuple(shape):
        raise ValueError(f"{field}: nested shape {p.shape} does not match cardinalities {tuple(shape)}")
    if np.any(p < -NEG_CLAMP):
        raise ValueError(f"{field}: negative probability")
    return np.maximum(p, 0.0)


def dist_from_json(doc: dict) -> JointDist:
    vars_ = _vars_from_json(doc.get("vars"), "vars")
    p = _probs_from_json(doc.get("probs"), [v.card for v in vars_], "probs")
    total = p.sum()
    if abs(total - 1.0) > FILE_TOL:
        raise ValueError(f"probs: total mass {total!r} is not within {FILE_TOL} of 1")
    return JointDist(vars_, p / total)


def dist_to_json(d: JointDist) -> dict:
    return {"vars": _vars_to_json(d.vars), "probs": d.probs.tolist()}


def channel_from_json(doc: dict) -> Channel:
    ins = _vars_from_json(doc.get("in_vars", []), "in_vars")
    outs = _vars_from_json(doc.get("out_vars"), "out_vars")
    shape = [v.card for v in ins + outs]
    p = _probs_from_json(doc.get("probs"), shape, "probs")
    rows = p.reshape(math.prod(v.card for v in ins), -1)
    sums = rows.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > FILE_TOL)
    if bad.size:
        raise ValueError(f"probs: input row {int(bad[0])} sums to {sums[bad[0]]!r}")
    return Channel(ins, outs, (rows / sums[:, None]).reshape(shape))


def channel_to_json(ch: Channel) -> dict:
    return {"in_vars": _vars_to_json(ch.in_vars), "out_vars": _vars_to_json(ch.out_vars),
            "probs": ch.probs.tolist()}


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
