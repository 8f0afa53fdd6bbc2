"""Linear combinations of joint entropies on dense tensors, with gradients,
plus Euclidean projection onto simplices and a projected-ascent loop."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

_LN2 = math.log(2.0)
_TINY = 1e-300


class EntropyExpr:
    """sum_S coef_S * H(P_S) for a tensor P whose axes are ``names``.

    Evaluated on unnormalized tensors too, which is what makes the gradient
    -log2 P_S - 1/ln2 exact for finite differences off the simplex.
    """

    def __init__(self, names, terms):
        self.names = tuple(names)
        merged: dict[frozenset, float] = {}
        for coef, subset in terms:
            key = frozenset(subset)
            if not key:
                continue
            unknown = key - set(self.names)
            if unknown:
                raise ValueError(f"unknown variables {sorted(unknown)}")
            merged[key] = merged.get(key, 0.0) + coef
        # deterministic term order
        self.terms = [(c, tuple(i for i, n in enumerate(self.names) if n in key))
                      for key, c in sorted(merged.items(), key=lambda kv: sorted(kv[0])) if c != 0.0]

    def _marg(self, P, keep):
        drop = tuple(i for i in range(P.ndim) if i not in keep)
        return P.sum(axis=drop, keepdims=True) if drop else P

    def value(self, P: np.ndarray) -> float:
        total = 0.0
        for c, keep in self.terms:
            m = self._marg(P, keep).ravel()
            m = m[m > 0]
            total += c * float(-np.sum(m * np.log2(m)))
        return total

    def grad(self, P: np.ndarray) -> np.ndarray:
        G = np.zeros_like(P)
        for c, keep in self.terms:
            m = self._marg(P, keep)
            G += c * (-np.log2(np.maximum(m, _TINY)) - 1.0 / _LN2)
        return G


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row (last axis) onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    shape = v.shape
    x = v.reshape(-1, shape[-1])
    n = x.shape[1]
    u = -np.sort(-x, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(x.shape[0]), rho] / (rho + 1)
    return np.maximum(x - theta[:, None], 0.0).reshape(shape)


@dataclass
class AscentResult:
    x: np.ndarray
    value: float
    iters: int
    converged: bool


def projected_ascent(f, grad, x0, project=project_simplex, step=1.0, tol=1e-7,
                     max_iters=200) -> AscentResult:
    """Maximize f by projected gradient steps with Armijo backtracking.

    Stops when an accepted step improves f by less than ``tol`` or when the
    step size collapses.
    """
    x = project(np.asarray(x0, dtype=float))
    fx = f(x)
    s = step
    for it in range(1, max_iters + 1):
        g = grad(x)
        while True:
            cand = project(x + s * g)
            d = cand - x
            fc = f(cand)
            if fc >= fx + 1e-4 * float(np.sum(g * d)) and fc >= fx:
                break
            s *= 0.5
            if s < 1e-12:
                return AscentResult(x, fx, it, True)
        gain = fc - fx
        x, fx = cand, fc
        s = min(s * 2.0, 1e6)
        if gain < tol:
            return AscentResult(x, fx, it, True)
    return AscentResult(x, fx, max_iters, False)


def simplex_grid(dim: int, res: int) -> np.ndarray:
    """All points of the dim-simplex with coordinates in {0, 1/(res-1), ..., 1}.

    Grids at res = 2^j + 1 are nested, so a max over the grid is monotone in j.
    """
    if res < 2:
        raise ValueError("grid resolution must be at least 2")
    steps = res - 1
    npts = math.comb(steps + dim - 1, dim - 1)
    if npts > 500_000:
        raise ValueError(f"grid has {npts} points; lower the resolution")
    pts = np.zeros((npts, dim))
    for row, combo in enumerate(combinations_with_replacement(range(dim), steps)):
        np.add.at(pts[row], list(combo), 1.0)
    return pts / steps


def seed_rng(*keys: int) -> np.random.Generator:
    """Generator keyed by a fixed counter tuple, independent of evaluation order."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))
