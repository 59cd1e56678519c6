"""Monte Carlo checks on sampled trajectories: stationarity, reversibility, method agreement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .graphon import Graphon

__all__ = [
    "CheckResult",
    "stationary_bin_probs",
    "chi2_stationarity",
    "reversibility_check",
    "ks_critical",
    "method_agreement",
]


@dataclass(frozen=True)
class CheckResult:
    statistic: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.statistic < self.threshold


def stationary_bin_probs(g: Graphon, bins: int) -> np.ndarray:
    """pi(A_i) = int_{A_i} d(x) dx / ||kappa||_1 over the equal partition."""
    B = np.asarray(g.bin_average(bins).values, dtype=float)
    mass = B.sum(axis=1)
    return mass / mass.sum()


def _bin_counts(points, bins):
    idx = np.minimum(np.floor(np.asarray(points) * bins).astype(np.int64), bins - 1)
    return idx, np.bincount(idx, minlength=bins)


def chi2_stationarity(points, g: Graphon, bins: int = 20, level: float = 0.99) -> CheckResult:
    """Pearson chi-square of bin occupancy against pi.

    The critical value assumes independent draws. Chain correlation inflates
    the statistic by at most the integrated autocorrelation of the bin
    process, which is small for the built-in kernels.
    """
    _, counts = _bin_counts(points, bins)
    expected = len(points) * stationary_bin_probs(g, bins)
    stat = float(((counts - expected) ** 2 / expected).sum())
    return CheckResult(stat, float(stats.chi2.ppf(level, bins - 1)))


def reversibility_check(points, k: int = 4, z: float = 3.0) -> CheckResult:
    """Largest |C_ab - C_ba| / sqrt(C_ab + C_ba) over off-diagonal cells of the k x k transition counts."""
    idx, _ = _bin_counts(points, k)
    C = np.bincount(idx[:-1] * k + idx[1:], minlength=k * k).reshape(k, k).astype(float)
    a, b = np.triu_indices(k, 1)
    total = C[a, b] + C[b, a]
    keep = total > 0
    zs = np.abs(C[a, b] - C[b, a])[keep] / np.sqrt(total[keep])
    return CheckResult(float(zs.max()) if zs.size else 0.0, z)


def ks_critical(n: int, m: int, level: float = 0.99) -> float:
    """Asymptotic two-sample Kolmogorov-Smirnov critical value."""
    c = math.sqrt(-0.5 * math.log((1.0 - level) / 2.0))
    return c * math.sqrt((n + m) / (n * m))


def method_agreement(a, b, factor: float = 2.0, level: float = 0.99) -> CheckResult:
    """Two-sample KS distance between samples, against ``factor`` times the critical value."""
    d = stats.ks_2samp(a, b).statistic
    return CheckResult(float(d), factor * ks_critical(len(a), len(b), level))
