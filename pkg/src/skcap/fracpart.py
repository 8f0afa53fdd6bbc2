"""Fractional partitions of [k] and linear optimization over their polytope.

Subsets of [k] = {1..k} are k-bit masks: terminal i is bit i-1. The
polytope is {lambda >= 0 : sum_{B containing i} lambda_B = 1 for all i}
over the 2^k - 2 nonempty proper subsets.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

ROW_TOL = 1e-9
ZERO_TOL = 1e-12
MAX_VERTEX_K = 5
MAX_LP_K = 12


def mask_of(subset: Iterable[int]) -> int:
    m = 0
    for i in subset:
        if int(i) < 1:
            raise ValueError(f"terminal indices start at 1, got {i}")
        m |= 1 << (int(i) - 1)
    return m


def members(mask: int) -> tuple[int, ...]:
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def proper_masks(k: int) -> range:
    """Canonical subset order: ascending mask value."""
    return range(1, (1 << k) - 1)


def _fmt(mask):
    return "{" + ",".join(map(str, members(mask))) + "}"


@dataclass(frozen=True)
class FractionalPartition:
    """Weights lambda_B on subsets of [k]; absent subsets carry weight 0.

    Construction only drops near-zero weights; use :func:`validate` to check
    the defining constraints.
    """

    k: int
    weights: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("a fractional partition needs k >= 2")
        clean = {}
        for m, w in self.weights.items():
            m = int(m)
            if m < 0 or m >= 1 << self.k:
                raise ValueError(f"mask {m} is not a subset of [{self.k}]")
            if abs(w) > ZERO_TOL:
                clean[m] = float(w)
        object.__setattr__(self, "weights", dict(sorted(clean.items())))

    @classmethod
    def from_subsets(cls, k: int, weights: Mapping[Iterable[int], float]) -> "FractionalPartition":
        return cls(k, {mask_of(s): w for s, w in weights.items()})

    def weight(self, subset) -> float:
        m = subset if isinstance(subset, int) else mask_of(subset)
        return self.weights.get(m, 0.0)

    def total(self) -> float:
        return float(sum(self.weights.values()))

    def vector(self) -> np.ndarray:
        """Dense weights in canonical mask order (length 2^k - 2)."""
        return np.array([self.weights.get(m, 0.0) for m in proper_masks(self.k)])

    @classmethod
    def from_vector(cls, k: int, vec) -> "FractionalPartition":
        return cls(k, {m: float(w) for m, w in zip(proper_masks(k), vec)})

    def items(self):
        return self.weights.items()

    def __str__(self):
        body = ", ".join(f"{_fmt(m)}:{w:.6g}" for m, w in self.weights.items())
        return f"FractionalPartition(k={self.k}; {body})"


@dataclass(frozen=True)
class Partition:
    """Partition of [k] into disjoint nonempty blocks."""

    blocks: tuple[frozenset, ...]

    def __init__(self, blocks: Iterable[Iterable[int]]):
        bl = tuple(frozenset(int(i) for i in b) for b in blocks)
        object.__setattr__(self, "blocks", bl)
        if not bl:
            raise ValueError("a partition needs at least one block")
        seen = set()
        for b in bl:
            if not b:
                raise ValueError("empty block")
            if seen & b:
                raise ValueError(f"blocks overlap on {sorted(seen & b)}")
            seen |= b
        if seen != set(range(1, len(seen) + 1)):
            raise ValueError(f"blocks must cover 1..k exactly, got {sorted(seen)}")

    @property
    def k(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def r(self) -> int:
        return len(self.blocks)

    def __str__(self):
        return "|".join(",".join(map(str, sorted(b))) for b in self.blocks)


def validate(fp: FractionalPartition) -> list[str]:
    """Return the list of violated constraints; empty means valid."""
    problems = []
    full = (1 << fp.k) - 1
    for m, w in fp.weights.items():
        if m == 0 or m == full:
            problems.append(f"subset {_fmt(m)} is not a nonempty proper subset (weight {w:g})")
        elif w < 0:
            problems.append(f"subset {_fmt(m)} has negative weight {w:g}")
    for i in range(fp.k):
        s = sum(w for m, w in fp.weights.items() if m >> i & 1 and m != full)
        if abs(s - 1.0) > ROW_TOL:
            problems.append(f"row {i + 1}: weights of subsets containing {i + 1} sum to {s:.12g}")
    return problems


def is_valid(fp: FractionalPartition) -> bool:
    return not validate(fp)


def require_valid(fp: FractionalPartition):
    problems = validate(fp)
    if problems:
        raise ValueError("invalid fractional partition: " + "; ".join(problems))


def preset_uniform_km1(k: int) -> FractionalPartition:
    """Weight 1/(k-1) on every (k-1)-subset."""
    if k < 2:
        raise ValueError("k must be at least 2")
    full = (1 << k) - 1
    return FractionalPartition(k, {full ^ (1 << i): 1.0 / (k - 1) for i in range(k)})


def preset_partition(pi: Partition) -> FractionalPartition:
    """Weight 1/(r-1) on the complement of each block."""
    if pi.r < 2:
        raise ValueError("the partition needs at least two blocks")
    full = (1 << pi.k) - 1
    return FractionalPartition(pi.k, {full ^ mask_of(b): 1.0 / (pi.r - 1) for b in pi.blocks})


def admissible_for_keyset(fp: FractionalPartition, r: int) -> bool:
    """True iff no weighted proper subset contains all of 1..r."""
    if not 1 <= r <= fp.k:
        raise ValueError(f"r={r} must lie in 1..{fp.k}")
    key = (1 << r) - 1
    full = (1 << fp.k) - 1
    return all(abs(w) <= ZERO_TOL for m, w in fp.weights.items() if m & key == key and m != full)


def forbidden_for_keyset(k: int, r: int) -> set[int]:
    key = (1 << r) - 1
    return {m for m in proper_masks(k) if m & key == key}


# ---------------------------------------------------------------- polytope

def incidence(k: int) -> np.ndarray:
    """k x (2^k-2) matrix, A[i, col] = 1 iff terminal i+1 is in the column's subset."""
    masks = np.arange(1, (1 << k) - 1)
    return ((masks[None, :] >> np.arange(k)[:, None]) & 1).astype(float)


@functools.lru_cache(maxsize=32)
def _vertex_vectors_cached(k: int, allowed: tuple | None) -> np.ndarray:
    out = _enumerate_bfs(k, allowed)
    out.setflags(write=False)
    return out


def _vertex_vectors(k: int, allowed=None) -> np.ndarray:
    return _vertex_vectors_cached(k, None if allowed is None else tuple(sorted(allowed)))


def _enumerate_bfs(k: int, allowed) -> np.ndarray:
    """All basic feasible solutions, canonical order (lexicographic on the weight vector)."""
    A = incidence(k)
    ncols = A.shape[1]
    cols = np.arange(ncols) if allowed is None else np.asarray(allowed)
    if cols.size < k:
        return np.zeros((0, ncols))
    found = {}
    ones = np.ones(k)
    combos = np.array(list(itertools.combinations(cols, k)))
    for chunk in np.array_split(combos, max(1, len(combos) // 20000)):
        mats = np.transpose(A[:, chunk], (1, 0, 2))  # (batch, k, k)
        det = np.linalg.det(mats)
        ok = np.abs(det) > 0.5  # integer matrices: det is 0 or |det| >= 1
        if not ok.any():
            continue
        sol = np.linalg.solve(mats[ok], np.broadcast_to(ones[:, None], (int(ok.sum()), k, 1)))[..., 0]
        feas = np.all(sol >= -1e-12, axis=1)
        for basis, x in zip(chunk[ok][feas], sol[feas]):
            v = np.zeros(ncols)
            v[basis] = np.where(np.abs(x) < ZERO_TOL, 0.0, x)
            key = tuple(np.round(v, 9))
            found.setdefault(key, v)
    return np.array([found[key] for key in sorted(found)])


def vertices(k: int) -> list[FractionalPartition]:
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > MAX_VERTEX_K:
        raise ValueError(f"vertex enumeration is limited to k <= {MAX_VERTEX_K}")
    return [FractionalPartition.from_vector(k, v) for v in _vertex_vectors(k)]


def _objective_vector(k: int, objective) -> np.ndarray:
    if isinstance(objective, Mapping):
        c = np.zeros((1 << k) - 2)
        for s, val in objective.items():
            m = s if isinstance(s, (int, np.integer)) else mask_of(s)
            if not 0 < m < (1 << k) - 1:
                raise ValueError(f"objective subset {s!r} is not a nonempty proper subset")
            c[m - 1] = val
        return c
    c = np.asarray(objective, dtype=float)
    if c.shape != ((1 << k) - 2,):
        raise ValueError("objective vector must have one entry per proper subset")
    return c


def simplex_min(c: np.ndarray, A: np.ndarray, b: np.ndarray, basis: list[int],
                max_iters: int = 100000) -> tuple[np.ndarray, float]:
    """Minimize c.x s.t. Ax = b, x >= 0 from a feasible starting basis (Bland's rule)."""
    m, n = A.shape
    basis = list(basis)
    for _ in range(max_iters):
        B = A[:, basis]
        xb = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, c[basis])
        reduced = c - A.T @ y
        reduced[basis] = 0.0
        entering = np.flatnonzero(reduced < -1e-11)
        if entering.size == 0:
            x = np.zeros(n)
            x[basis] = xb
            x[np.abs(x) < ZERO_TOL] = 0.0
            return x, float(c @ x)
        e = int(entering[0])  # Bland: smallest index
        d = np.linalg.solve(B, A[:, e])
        pos = d > 1e-12
        if not pos.any():
            raise RuntimeError("unbounded LP")  # cannot happen on a bounded polytope
        ratios = np.full(m, np.inf)
        ratios[pos] = xb[pos] / d[pos]
        best = ratios.min()
        ties = [i for i in range(m) if pos[i] and ratios[i] <= best + 1e-12]
        leave = min(ties, key=lambda i: basis[i])  # Bland: smallest basic index
        basis[leave] = e
    raise RuntimeError("simplex iteration limit reached")


def optimize_linear(k: int, objective, sense: str = "min", method: str = "auto",
                    r: int | None = None) -> tuple[FractionalPartition, float]:
    """Optimize sum_B c_B lambda_B over the fractional-partition polytope.

    ``objective`` is a mapping subset -> coefficient (subsets as masks or
    iterables of 1-based indices) or a dense vector in canonical order.
    With ``r`` set, only partitions admissible for key set 1..r are searched
    (a face of the polytope, empty when r = 1).
    """
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    if not 2 <= k <= MAX_LP_K:
        raise ValueError(f"k must lie in 2..{MAX_LP_K}")
    if method == "auto":
        method = "vertex" if k <= MAX_VERTEX_K else "simplex"
    c = _objective_vector(k, objective)
    sign = 1.0 if sense == "min" else -1.0
    forbidden = forbidden_for_keyset(k, r) if r is not None else set()
    if r is not None and r < 2:
        raise ValueError("no fractional partition is admissible for a single key terminal")
    allowed = [m - 1 for m in proper_masks(k) if m not in forbidden]

    if method == "vertex":
        if k > MAX_VERTEX_K:
            raise ValueError(f"vertex enumeration is limited to k <= {MAX_VERTEX_K}")
        verts = _vertex_vectors(k, allowed)
        vals = sign * (verts @ c)
        best = vals.min()
        i = int(np.flatnonzero(vals <= best + 1e-12)[0])
        return FractionalPartition.from_vector(k, verts[i]), float(verts[i] @ c)
    if method != "simplex":
        raise ValueError(f"unknown method {method!r}")

    # singletons form a feasible starting basis (lambda_{i} = 1), kept when r >= 2
    A = incidence(k)[:, allowed]
    basis = [allowed.index((1 << i) - 1) for i in range(k)]
    x, _ = simplex_min(sign * c[allowed], A, np.ones(k), basis)
    full = np.zeros((1 << k) - 2)
    full[allowed] = x
    return FractionalPartition.from_vector(k, full), float(full @ c)


# ---------------------------------------------------------------- I/O

def parse_preset(text: str, k: int) -> FractionalPartition:
    """``uniform-km1`` or ``partition:1,2|3``."""
    if text == "uniform-km1":
        return preset_uniform_km1(k)
    if text.startswith("partition:"):
        blocks = [[int(t) for t in blk.split(",") if t.strip()] for blk in text[len("partition:"):].split("|")]
        pi = Partition(blocks)
        if pi.k != k:
            raise ValueError(f"partition covers {pi.k} terminals, expected {k}")
        return preset_partition(pi)
    raise ValueError(f"unknown lambda preset {text!r}")


def fp_from_json(doc: dict) -> FractionalPartition:
    try:
        k = int(doc["k"])
        weights = {}
        for i, item in enumerate(doc["weights"]):
            m = mask_of(item["subset"])
            weights[m] = weights.get(m, 0.0) + float(item["w"])
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"lambda file: {e}") from None
    return FractionalPartition(k, weights)


def fp_to_json(fp: FractionalPartition) -> dict:
    return {"k": fp.k, "weights": [{"subset": list(members(m)), "w": w} for m, w in fp.weights.items()]}
