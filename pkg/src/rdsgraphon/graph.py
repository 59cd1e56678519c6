"""
Clumping a trajectory into n bins and building the RDS graph.

Edge weights follow the half convention: an observed pair {i, j} gets weight
1/2, so that each unordered edge, which occupies two ordered cells of the
associated step graphon, carries total mass 1 and the scaled graph
(n^2/N) G_n is comparable with the normalized kernel.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .graphon import StepGraphon
from .sampler import ChainTrajectory

__all__ = [
    "WeightedGraph",
    "PairCounts",
    "bin_index",
    "pair_counts",
    "build_rds_graph",
    "scale",
    "to_step_graphon",
]

EDGE_WEIGHT = 0.5


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Vertices 1..n with a symmetric nonnegative weight matrix.

    RDS graphs have a zero diagonal. Deterministic comparison graphs may carry
    diagonal (self-loop) weights, which map to the diagonal cells of the step
    graphon.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix")
        if not np.allclose(w, w.T, rtol=0.0, atol=1e-12):
            raise ValueError("weights must be symmetric")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return bool(np.array_equal(self.weights, other.weights))

    __hash__ = None

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def edge_count(self) -> int:
        """Number of unordered pairs i < j with positive weight."""
        return int(np.count_nonzero(np.triu(self.weights, 1)))

    def edges(self):
        i, j = np.nonzero(np.triu(self.weights, 1))
        return [(int(a) + 1, int(b) + 1, float(self.weights[a, b])) for a, b in zip(i, j)]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j", "weight"])
            for i, j, wt in self.edges():
                w.writerow([i, j, repr(wt)])


@dataclass(frozen=True, eq=False)
class PairCounts:
    """E_n(i, j) for i != j (symmetric, zero diagonal) and within-bin counts."""

    counts: np.ndarray
    diag: np.ndarray

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        """Each transition lands in exactly one unordered bin pair, so this equals N."""
        return int(np.triu(self.counts, 1).sum() + self.diag.sum())


def bin_index(x, n: int):
    """1-based bin of x in the equal n-partition; x = 1 belongs to bin n."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    arr = np.asarray(x, dtype=float)
    if arr.size and (np.any(~np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("bin_index needs points in [0, 1]")
    idx = np.minimum(np.floor(arr * n).astype(np.int64), n - 1) + 1
    return int(idx) if idx.ndim == 0 else idx


def _points(t):
    return t.points if isinstance(t, ChainTrajectory) else np.asarray(t, dtype=float)


def pair_counts(t, n: int) -> PairCounts:
    pts = _points(t)
    if pts.size < 2:
        raise ValueError("pair counts need at least two points")
    b = bin_index(pts, n) - 1
    flat = np.bincount(b[:-1] * n + b[1:], minlength=n * n).reshape(n, n)
    diag = np.diag(flat).copy()
    counts = flat + flat.T
    np.fill_diagonal(counts, 0)
    return PairCounts(counts, diag)


def build_rds_graph(t, n: int) -> WeightedGraph:
    pc = pair_counts(t, n)
    return WeightedGraph(np.where(pc.counts > 0, EDGE_WEIGHT, 0.0))


def scale(G: WeightedGraph, c: float) -> WeightedGraph:
    return WeightedGraph(G.weights * float(c))


def to_step_graphon(G: WeightedGraph) -> StepGraphon:
    return StepGraphon(G.weights)
