"""Multivariate (lambda-) mutual information and its companions.

Every function takes "groups": an ordered list of variable-name sets, one
per terminal, so compound arguments such as (X_i, Y_i) need no flattening.
Any object with ``entropy(names)`` and ``names`` works as a distribution.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Sequence

from .dist import Channel, as_names, binary_entropy, push_through
from .fracpart import (
    FractionalPartition,
    Partition,
    members,
    preset_partition,
    preset_uniform_km1,
    require_valid,
)

MAX_PARTITION_K = 8


def _groups(d, groups, cond=()) -> tuple[list[tuple[str, ...]], tuple[str, ...]]:
    gs = [as_names(g) for g in groups]
    cond = as_names(cond)
    known = set(d.names)
    seen = set(cond)
    for n in cond:
        if n not in known:
            raise ValueError(f"unknown variable {n!r}")
    for i, g in enumerate(gs, 1):
        if not g:
            raise ValueError(f"group {i} is empty")
        for n in g:
            if n not in known:
                raise ValueError(f"unknown variable {n!r}")
            if n in seen:
                raise ValueError(f"variable {n!r} appears in more than one group or in the condition")
            seen.add(n)
    return gs, cond


def _union(gs, mask) -> tuple[str, ...]:
    out = ()
    for i in members(mask):
        out += gs[i - 1]
    return out


def i_lambda_terms(k: int, fp: FractionalPartition, groups, cond=()) -> list[tuple[float, tuple[str, ...]]]:
    """I_lambda(groups | cond) as a linear combination of joint entropies.

    Uses H(X_B | X_Bc, C) = H(X, C) - H(X_Bc, C), so
    I_lambda = (1 - sum lambda) H(X, C) + sum_B lambda_B H(X_Bc, C) - H(C).
    """
    gs = [as_names(g) for g in groups]
    cond = as_names(cond)
    full = (1 << k) - 1
    everything = _union(gs, full) + cond
    terms = [(1.0 - fp.total(), everything)]
    for m, w in fp.items():
        terms.append((w, _union(gs, full ^ m) + cond))
    if cond:
        terms.append((-1.0, cond))
    return terms


def i_lambda(d, groups: Sequence, fp: FractionalPartition, cond=()) -> float:
    """H(X_[k] | C) - sum_B lambda_B H(X_B | X_Bc, C)."""
    gs, cond = _groups(d, groups, cond)
    if fp.k != len(gs):
        raise ValueError(f"fractional partition is for k={fp.k} but {len(gs)} groups were given")
    require_valid(fp)
    cache = {}

    def h(names):
        key = frozenset(names)
        if key not in cache:
            cache[key] = d.entropy(names)
        return cache[key]

    return sum(c * h(names) for c, names in i_lambda_terms(len(gs), fp, gs, cond))


def j_info(d, groups: Sequence, cond=()) -> float:
    """Total correlation sum_i H(group_i | C) - H(all | C)."""
    gs, cond = _groups(d, groups, cond)
    hc = d.entropy(cond)
    allv = tuple(n for g in gs for n in g)
    return sum(d.entropy(g + cond) - hc for g in gs) - (d.entropy(allv + cond) - hc)


def _merge(gs, pi: Partition):
    return [tuple(n for i in sorted(b) for n in gs[i - 1]) for b in pi.blocks]


def tc_identity_check(d, groups: Sequence, variant="km1") -> tuple[float, float, float]:
    """Compare I_lambda under a structured lambda with its total-correlation form.

    ``variant`` is ``"km1"`` (weight 1/(k-1) on (k-1)-subsets, expected J/(k-1))
    or a :class:`Partition` (expected J(blocks)/(r-1)).
    Returns (i_lambda value, J-based value, difference).
    """
    gs, _ = _groups(d, groups)
    k = len(gs)
    if variant == "km1":
        fp = preset_uniform_km1(k)
        other = j_info(d, gs) / (k - 1)
    elif isinstance(variant, Partition):
        if variant.k != k:
            raise ValueError("partition does not match the number of groups")
        fp = preset_partition(variant)
        other = j_info(d, _merge(gs, variant)) / (variant.r - 1)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    val = i_lambda(d, gs, fp)
    return val, other, val - other


def set_partitions(k: int) -> Iterator[Partition]:
    """All partitions of 1..k, generated from restricted-growth strings."""
    if k < 1:
        return
    a = [0] * k
    while True:
        blocks = {}
        for i, lab in enumerate(a):
            blocks.setdefault(lab, []).append(i + 1)
        yield Partition(blocks[lab] for lab in sorted(blocks))
        # next restricted growth string: increment rightmost position that can grow
        i = k - 1
        while i > 0 and a[i] == max(a[:i]) + 1:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for j in range(i + 1, k):
            a[j] = 0


def bell(k: int) -> int:
    row = [1]
    for _ in range(k):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def partition_bound_check(d, groups: Sequence, fp: FractionalPartition) -> tuple[float, float, Partition]:
    """I_lambda next to min over partitions (r >= 2) of J(blocks)/(r-1).

    Returns (I_lambda, minimum, minimizing partition); ties keep the first
    partition in restricted-growth order.
    """
    gs, _ = _groups(d, groups)
    k = len(gs)
    if k > MAX_PARTITION_K:
        raise ValueError(f"partition enumeration is limited to k <= {MAX_PARTITION_K}")
    lhs = i_lambda(d, gs, fp)
    cache = {}

    def h(names):
        key = frozenset(names)
        if key not in cache:
            cache[key] = d.entropy(names)
        return cache[key]

    h_all = h(tuple(n for g in gs for n in g))
    best, arg = math.inf, None
    for pi in set_partitions(k):
        if pi.r < 2:
            continue
        blocks = _merge(gs, pi)
        val = (sum(h(b) for b in blocks) - h_all) / (pi.r - 1)
        if val < best - 1e-15:
            best, arg = val, pi
    return lhs, best, arg


def fano_bound(A: Iterable[int], eps: float, fp: FractionalPartition, cards: Sequence[int],
               over_all: bool = False) -> float:
    """Penalty (sum lambda)(H2(eps) + eps * sum log2|X_i|) subtracted from H(X_A).

    The log-cardinality sum runs over A, or over all of [k] with ``over_all``.
    ``cards[i-1]`` is the alphabet size of terminal i. The weights are not
    required to form a valid partition.
    """
    amask = 0
    for i in A:
        amask |= 1 << (int(i) - 1)
    if amask == 0:
        raise ValueError("A must be nonempty")
    if len(cards) != fp.k:
        raise ValueError(f"need {fp.k} alphabet sizes, got {len(cards)}")
    for m, w in fp.items():
        if m & amask == amask and w != 0:
            raise ValueError(f"lambda is nonzero on subset {members(m)} which contains A")
    idx = range(1, fp.k + 1) if over_all else members(amask)
    logs = sum(math.log2(cards[i - 1]) for i in idx)
    return fp.total() * (binary_entropy(eps) + eps * logs)


def data_processing_gap(d, groups: Sequence, fp: FractionalPartition,
                        local_channels: Sequence[Channel]) -> tuple[float, float]:
    """(I_lambda of the groups, I_lambda of the locally processed outputs)."""
    gs, _ = _groups(d, groups)
    if len(local_channels) != len(gs):
        raise ValueError("need one local channel per group")
    out = d
    for i, (g, ch) in enumerate(zip(gs, local_channels), 1):
        foreign = set(ch.in_names) - set(g)
        if foreign:
            raise ValueError(f"channel {i} reads variables outside its group: {sorted(foreign)}")
        out = push_through(out, ch)
    before = i_lambda(d, gs, fp)
    after = i_lambda(out, [ch.out_names for ch in local_channels], fp)
    return before, after
