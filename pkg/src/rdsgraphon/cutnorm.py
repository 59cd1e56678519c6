"""
Cut distance between step graphons on a common n-partition.

For a difference matrix D the cut norm is

    (1/n^2) max_{S,T subset [n]} | sum_{i in S, j in T} D_ij |.

The objective is bilinear in the inclusion fractions of each bin, so the
supremum over measurable sets is attained at unions of bins. Given S the best
T is {j : c_j > 0} or {j : c_j < 0} for the column sums c = 1_S D, which
leaves 2^n row subsets to enumerate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .graphon import StepGraphon, l1_distance

__all__ = [
    "CutResult",
    "ExactLimitError",
    "bilinear_objective",
    "cut_distance_exact",
    "cut_distance_heuristic",
    "cut_distance",
    "d1_step",
    "fractional_check",
    "cut_norm_exact",
    "cut_norm_heuristic",
    "cut_norm_bruteforce",
]

EXACT_LIMIT = 24
_CHUNK = 1 << 15


class ExactLimitError(ValueError):
    pass


@dataclass(frozen=True)
class CutResult:
    value: float
    s_set: tuple
    t_set: tuple
    method: str
    upper_bound: float


def _difference(a, b):
    if a.n != b.n:
        raise ValueError(f"step graphons live on different partitions ({a.n} vs {b.n})")
    return np.asarray(a.values, dtype=float) - np.asarray(b.values, dtype=float)


def bilinear_objective(D, s_set, t_set) -> float:
    """|sum_{i in S, j in T} D_ij| / n^2 for 0-based index sets."""
    D = np.asarray(D, dtype=float)
    s = np.zeros(D.shape[0])
    t = np.zeros(D.shape[0])
    s[list(s_set)] = 1.0
    t[list(t_set)] = 1.0
    return float(abs(s @ D @ t) / D.shape[0] ** 2)


def _best_columns(c):
    """Sign rule for fixed S; zero columns stay out of T."""
    pos = c[c > 0].sum()
    neg = -c[c < 0].sum()
    if pos >= neg:
        return np.flatnonzero(c > 0), pos
    return np.flatnonzero(c < 0), neg


@_accel.njit
def _gray_max_numba(D):
    n = D.shape[0]
    c = np.zeros(n)
    best = 0.0
    best_mask = 0
    mask = 0
    for k in range(1, 1 << n):
        bit = 0
        t = k
        while (t & 1) == 0:
            t >>= 1
            bit += 1
        mask ^= 1 << bit
        if (mask >> bit) & 1:
            for j in range(n):
                c[j] += D[bit, j]
        else:
            for j in range(n):
                c[j] -= D[bit, j]
        pos = 0.0
        neg = 0.0
        for j in range(n):
            if c[j] > 0.0:
                pos += c[j]
            else:
                neg -= c[j]
        val = pos if pos >= neg else neg
        if val > best:
            best = val
            best_mask = mask
    return best, best_mask


def _gray_max_numpy(D):
    n = D.shape[0]
    shifts = np.arange(n, dtype=np.int64)
    best, best_mask = 0.0, 0
    for start in range(0, 1 << n, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, 1 << n), dtype=np.int64)
        bits = ((masks[:, None] >> shifts) & 1).astype(float)
        C = bits @ D
        pos = np.where(C > 0.0, C, 0.0).sum(axis=1)
        neg = -np.where(C < 0.0, C, 0.0).sum(axis=1)
        val = np.maximum(pos, neg)
        k = int(np.argmax(val))
        if val[k] > best:
            best, best_mask = float(val[k]), int(masks[k])
    return best, best_mask


gray_max_numba = _gray_max_numba
gray_max_numpy = _gray_max_numpy
_gray_max = _accel.select(_gray_max_numba, _gray_max_numpy)


def cut_norm_exact(D, exact_limit: int = EXACT_LIMIT, kernel=None):
    """Exact cut norm of a square matrix; returns (value, S, T) with 0-based sets."""
    D = np.ascontiguousarray(D, dtype=float)
    n = D.shape[0]
    if n > exact_limit:
        raise ExactLimitError(f"n={n} exceeds the exact limit {exact_limit}; use the heuristic solver")
    _, mask = (kernel or _gray_max)(D)
    s_set = tuple(i for i in range(n) if (mask >> i) & 1)
    t_set, _ = _best_columns(D[list(s_set)].sum(axis=0)) if s_set else (np.array([], dtype=np.int64), 0.0)
    t_set = tuple(int(j) for j in t_set)
    return bilinear_objective(D, s_set, t_set), s_set, t_set


def cut_norm_bruteforce(D) -> float:
    """Enumerate every (S, T) pair directly; only for small n."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    masks = np.arange(1 << n, dtype=np.int64)
    ind = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    return float(np.abs(ind @ D @ ind.T).max() / n ** 2)


def cut_norm_heuristic(D, restarts: int = 32, seed: int = 0, max_sweeps: int = 1000):
    """Alternating maximization over (S, T); a lower bound on the cut norm."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    rng = np.random.default_rng(seed)
    best = (-1.0, (), ())
    starts = [np.ones(n, dtype=bool)] + [rng.random(n) < 0.5 for _ in range(max(restarts, 1) - 1)]
    for s in starts:
        prev = -1.0
        for _ in range(max_sweeps):
            t_idx, _ = _best_columns(D[s].sum(axis=0))
            s_idx, val = _best_columns(D[:, t_idx].sum(axis=1))
            if val <= prev:
                break
            prev = val
            s = np.zeros(n, dtype=bool)
            s[s_idx] = True
        s_set = tuple(int(i) for i in np.flatnonzero(s))
        t_set = tuple(int(j) for j in _best_columns(D[s].sum(axis=0))[0])
        value = bilinear_objective(D, s_set, t_set)
        if value > best[0]:
            best = (value, s_set, t_set)
    return best


def cut_distance_exact(a: StepGraphon, b: StepGraphon, exact_limit: int = EXACT_LIMIT) -> CutResult:
    D = _difference(a, b)
    value, s_set, t_set = cut_norm_exact(D, exact_limit)
    return CutResult(value, s_set, t_set, "exact", l1_distance(a, b))


def cut_distance_heuristic(a: StepGraphon, b: StepGraphon, restarts: int = 32, seed: int = 0) -> CutResult:
    D = _difference(a, b)
    value, s_set, t_set = cut_norm_heuristic(D, restarts, seed)
    return CutResult(value, s_set, t_set, "heuristic", l1_distance(a, b))


def cut_distance(a, b, method: str = "auto", exact_limit: int = EXACT_LIMIT, restarts: int = 32, seed: int = 0):
    """Dispatch: ``auto`` uses the exact solver up to ``exact_limit`` and the heuristic beyond."""
    if method == "exact" or (method == "auto" and a.n <= exact_limit):
        return cut_distance_exact(a, b, exact_limit)
    if method in {"heuristic", "auto"}:
        return cut_distance_heuristic(a, b, restarts, seed)
    raise ValueError(f"unknown cut-norm method {method!r}")


def d1_step(a: StepGraphon, b: StepGraphon) -> float:
    return l1_distance(a, b)


def fractional_check(a, b, samples: int = 10_000, seed: int = 0, exact_limit: int = EXACT_LIMIT) -> float:
    """Largest |s^T D t| / n^2 over random fractional s, t in [0, 1]^n."""
    D = _difference(a, b)
    n = D.shape[0]
    if n > exact_limit:
        raise ExactLimitError(f"n={n} exceeds the exact limit {exact_limit}")
    rng = np.random.default_rng(seed)
    S = rng.random((samples, n))
    T = rng.random((samples, n))
    vals = np.abs(np.einsum("ki,ij,kj->k", S, D, T)) / n ** 2
    return float(vals.max()) if samples else 0.0
