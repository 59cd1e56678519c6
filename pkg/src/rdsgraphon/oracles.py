"""
Exact computations for chains whose state space is an m-bin partition.

When the kernel is a block kernel with cuts on the m-grid, the bin process of
the continuous chain is itself Markov with the discretized transition matrix,
so everything here is exact for the continuous model. For smooth kernels the
m-grid chain is an O(1/m) approximation.
"""

from __future__ import annotations

import csv
import math
import sys
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _accel
from .graph import WeightedGraph, to_step_graphon, scale
from .graphon import (
    BlockGraphon,
    ConstantGraphon,
    Graphon,
    K1Certificate,
    grid_quadrature,
    l1_distance,
)

__all__ = [
    "FiniteChain",
    "PairLaw",
    "TVInterval",
    "Lemma2Aggregate",
    "discretize",
    "expected_graph",
    "expected_indicators",
    "h_graph",
    "pair_count_law",
    "tv_poisson",
    "stein_chen_pair_bound",
    "lemma2_aggregate",
    "oracle_report",
    "write_oracle_csv",
]


@dataclass(frozen=True)
class FiniteChain:
    P: np.ndarray
    pi: np.ndarray
    exact: bool = False

    @property
    def m(self) -> int:
        return self.P.shape[0]

    def check(self, tol=1e-10):
        """Row sums, stationarity and detailed balance; returns the worst residual."""
        rows = np.abs(self.P.sum(axis=1) - 1.0).max()
        stat = np.abs(self.pi @ self.P - self.pi).max()
        flow = self.pi[:, None] * self.P
        balance = np.abs(flow - flow.T).max()
        worst = float(max(rows, stat, balance))
        if worst > tol:
            raise AssertionError(f"finite chain fails consistency checks (residual {worst:.3g})")
        return worst


@dataclass(frozen=True)
class PairLaw:
    """Law of E_n(i, j) on {0..K} plus the mass beyond K."""

    probs: np.ndarray
    overflow: float
    mean: float

    @property
    def cap(self) -> int:
        return self.probs.size - 1

    @property
    def p0(self) -> float:
        return float(self.probs[0])


@dataclass(frozen=True)
class TVInterval:
    lo: float
    hi: float


@dataclass(frozen=True)
class Lemma2Aggregate:
    d1_exact: float
    bound: float
    closed_form_bound: float


def _aligned(g: Graphon, m: int) -> bool:
    if isinstance(g, ConstantGraphon):
        return True
    if isinstance(g, BlockGraphon):
        scaled = g.cuts * m
        return bool(np.allclose(scaled, np.round(scaled), rtol=0.0, atol=1e-9))
    return False


def discretize(g: Graphon, m: int) -> FiniteChain:
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    m = int(m)
    B = np.asarray(g.bin_average(m, grid_quadrature(m)).values, dtype=float)
    rows = B.sum(axis=1)
    if np.any(rows <= 0.0):
        raise ValueError("discretized kernel has a zero row; positivity fails on some bin")
    return FiniteChain(B / rows[:, None], rows / rows.sum(), _aligned(g, m))


def _block_size(chain: FiniteChain, n: int) -> int:
    if chain.m % n:
        raise ValueError(f"chain with m={chain.m} states is not aligned with n={n} bins")
    return chain.m // n


def _pairs(n):
    i, j = np.triu_indices(n, 1)
    return np.stack([i, j], axis=1)


@_accel.njit
def _taboo_numba(P, pi, k, pairs, N):
    m = P.shape[0]
    out = np.empty(pairs.shape[0])
    v = np.empty(m)
    w = np.empty(m)
    for p in range(pairs.shape[0]):
        ia = pairs[p, 0] * k
        ja = pairs[p, 1] * k
        for a in range(m):
            v[a] = pi[a]
        for _ in range(N):
            for b in range(m):
                w[b] = 0.0
            for a in range(m):
                va = v[a]
                if va == 0.0:
                    continue
                a_in_i = ia <= a < ia + k
                a_in_j = ja <= a < ja + k
                for b in range(m):
                    if a_in_i and ja <= b < ja + k:
                        continue
                    if a_in_j and ia <= b < ia + k:
                        continue
                    w[b] += va * P[a, b]
            for b in range(m):
                v[b] = w[b]
        s = 0.0
        for a in range(m):
            s += v[a]
        out[p] = s
    return out


def _taboo_numpy(P, pi, k, pairs, N):
    m = P.shape[0]
    block = np.arange(m) // k
    A = block[None, :] == pairs[:, 0:1]
    Bj = block[None, :] == pairs[:, 1:2]
    forbidden = (A[:, :, None] & Bj[:, None, :]) | (Bj[:, :, None] & A[:, None, :])
    Q = np.where(forbidden, 0.0, P[None, :, :])
    v = np.broadcast_to(pi, (pairs.shape[0], m)).copy()
    for _ in range(N):
        v = np.matmul(v[:, None, :], Q)[:, 0, :]
    return v.sum(axis=1)


taboo_numba = _taboo_numba
taboo_numpy = _taboo_numpy
_taboo = _accel.select(_taboo_numba, _taboo_numpy)


def expected_indicators(chain: FiniteChain, n: int, N: int, kernel=None):
    """n x n matrix of E I_n(i, j) = 1 - P[no transition between A_i and A_j in N steps]."""
    k = _block_size(chain, n)
    if N < 0:
        raise ValueError("N must be nonnegative")
    out = np.zeros((n, n))
    if N == 0 or n == 1:
        return out
    pairs = _pairs(n).astype(np.int64)
    P = np.ascontiguousarray(chain.P, dtype=float)
    pi = np.ascontiguousarray(chain.pi, dtype=float)
    survive = (kernel or _taboo)(P, pi, k, pairs, int(N))
    vals = np.clip(1.0 - survive, 0.0, 1.0)
    out[pairs[:, 0], pairs[:, 1]] = vals
    out[pairs[:, 1], pairs[:, 0]] = vals
    return out


def expected_graph(chain: FiniteChain, n: int, N: int) -> WeightedGraph:
    return WeightedGraph(0.5 * expected_indicators(chain, n, N))


def h_graph(gbar: Graphon, n: int, N: int) -> WeightedGraph:
    """Poissonized comparison graph, weights (n^2/2N)(1 - exp(-(2N/n^2) mu_n(i, j))).

    All cells, including the diagonal, follow the formula, so its step graphon
    is the cellwise Poissonization of the bin-averaged normalized kernel.
    """
    if N < 1:
        raise ValueError("N must be positive")
    mu = np.asarray(gbar.bin_average(n).values, dtype=float)
    x = 2.0 * N / n ** 2
    return WeightedGraph(-np.expm1(-x * mu) / x)


def _forbidden_mask(chain, n, i, j):
    k = _block_size(chain, n)
    block = np.arange(chain.m) // k
    in_i, in_j = block == i, block == j
    return (in_i[:, None] & in_j[None, :]) | (in_j[:, None] & in_i[None, :])


def pair_count_law(chain: FiniteChain, n: int, i: int, j: int, N: int, cap: int | None = None) -> PairLaw:
    """Exact law of E_n(i, j) by forward recursion over (state, count).

    Bins ``i`` and ``j`` are 0-based. Counts above ``cap`` are pooled into an
    overflow bucket. The default cap is max(50, ceil(10 * mean)).
    """
    F = _forbidden_mask(chain, n, i, j)
    Pf = np.where(F, chain.P, 0.0)
    Pa = chain.P - Pf
    per_step = float(chain.pi @ Pf.sum(axis=1))
    mean = N * per_step
    K = int(cap) if cap is not None else max(50, math.ceil(10 * mean))
    if K < 1:
        raise ValueError("cap must be at least 1")
    f = np.zeros((chain.m, K + 1))
    f[:, 0] = chain.pi
    overflow = 0.0
    for _ in range(N):
        hit = Pf.T @ f
        f = Pa.T @ f
        f[:, 1:] += hit[:, :-1]
        overflow += hit[:, -1].sum()
    return PairLaw(f.sum(axis=0), float(overflow), mean)


def tv_poisson(law: PairLaw, mean: float) -> TVInterval:
    """Total variation between the law and Poisson(mean) as an interval.

    Beyond the cap only the overflow mass o and the Poisson tail t are known,
    which pins the tail contribution between |o - t|/2 and (o + t)/2.
    """
    k = np.arange(law.probs.size)
    pois = stats.poisson.pmf(k, mean) if mean > 0 else (k == 0).astype(float)
    tail = float(stats.poisson.sf(law.cap, mean)) if mean > 0 else 0.0
    core = 0.5 * float(np.abs(law.probs - pois).sum())
    lo = core + 0.5 * abs(law.overflow - tail)
    hi = core + 0.5 * (law.overflow + tail)
    return TVInterval(min(lo, 1.0), min(hi, 1.0))


def _pair_probability(gbar, n):
    mu = np.asarray(gbar.bin_average(n).values, dtype=float)
    return 2.0 * mu / n ** 2


def stein_chen_pair_bound(gbar: Graphon, cert: K1Certificate, n: int, i: int, j: int) -> float:
    """(1 + 2/delta) p(i, j) + (int_{A_i} phi + int_{A_j} phi) / delta, bins 0-based."""
    p = _pair_probability(gbar, n)[i, j]
    phi = cert.phi_bin_integrals(n)
    return float((1.0 + 2.0 / cert.delta) * p + (phi[i] + phi[j]) / cert.delta)


def lemma2_aggregate(gbar: Graphon, cert: K1Certificate, n: int, N: int, chain: FiniteChain | None = None,
                     m_multiplier: int = 1) -> Lemma2Aggregate:
    """d_1((n^2/N) E G_n, H_n) against the summed Stein-Chen bound.

    ``bound`` sums the per-pair bound over all ordered (i, j) and divides by 2N;
    ``closed_form_bound`` is the alternative form (1 + 2 delta) n / (2N) + n/(delta N) int phi,
    reported for comparison only; it does not follow from summing the per-pair bound.
    """
    chain = chain if chain is not None else discretize(gbar, n * m_multiplier)
    EG = scale(expected_graph(chain, n, N), n ** 2 / N)
    H = h_graph(gbar, n, N)
    d1 = l1_distance(to_step_graphon(EG), to_step_graphon(H))
    p = _pair_probability(gbar, n)
    phi = cert.phi_bin_integrals(n)
    per_pair = (1.0 + 2.0 / cert.delta) * p + (phi[:, None] + phi[None, :]) / cert.delta
    bound = float(per_pair.sum() / (2.0 * N))
    alt = (1.0 + 2.0 * cert.delta) * n / (2.0 * N) + n / (cert.delta * N) * cert.phi_total
    return Lemma2Aggregate(d1, bound, float(alt))


def oracle_report(gbar: Graphon, cert: K1Certificate, n: int, N: int, chain: FiniteChain | None = None):
    """Per unordered pair: E I_n, H weight, TV interval and Stein-Chen bound (1-based bins)."""
    chain = chain if chain is not None else discretize(gbar, n)
    EI = expected_indicators(chain, n, N)
    H = h_graph(gbar, n, N).weights
    rows = []
    for i, j in _pairs(n):
        law = pair_count_law(chain, n, i, j, N)
        tv = tv_poisson(law, law.mean)
        rows.append({
            "i": int(i) + 1,
            "j": int(j) + 1,
            "e_indicator": float(EI[i, j]),
            "h_weight": float(H[i, j]),
            "tv_lo": tv.lo,
            "tv_hi": tv.hi,
            "sc_bound": stein_chen_pair_bound(gbar, cert, n, i, j),
        })
    return rows


ORACLE_HEADER = ["i", "j", "e_indicator", "h_weight", "tv_lo", "tv_hi", "sc_bound"]


def write_oracle_csv(rows, path):
    fh = sys.stdout if path == "-" else open(path, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ORACLE_HEADER)
        for r in rows:
            w.writerow([r["i"], r["j"]] + [repr(float(r[k])) for k in ORACLE_HEADER[2:]])
    finally:
        if fh is not sys.stdout:
            fh.close()
