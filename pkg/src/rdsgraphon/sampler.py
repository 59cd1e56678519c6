"""
Seeded realizations of the stationary reversible chain with transition
density kappa(x, y) / d(x) and initial law pi(dx) = d(x) dx / ||kappa||_1.

Three samplers are available:

``exact``
    closed-form inverse CDFs (constant, product, block and step kernels).
``rejection``
    proposals from the (K1) envelope phi, accepted with probability
    kappa(x, y) / (d(x) phi(y)).
``grid``
    the chain run on an m-bin discretization: jump between bins with the
    row-normalized bin averages of kappa, then place the point uniformly in
    the bin. The CDF bias is O(1/m); with m a multiple of n the bin process
    is exactly the finite chain used by the oracles.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .graphon import (
    BlockGraphon,
    ConstantGraphon,
    Graphon,
    K1Certificate,
    ProductGraphon,
    grid_quadrature,
)
from .seeding import make_rng

__all__ = [
    "CertificateViolation",
    "SamplerMethod",
    "ChainTrajectory",
    "sample_initial",
    "sample_transition",
    "sample_transitions",
    "sample_trajectory",
    "chain_walk",
]

METHODS = ("exact", "rejection", "grid")
MAX_REJECTION_TRIALS = 10 ** 6
DEFAULT_GRID = 1024


class CertificateViolation(RuntimeError):
    """The rejection sampler met an acceptance ratio above one, or never accepted."""


@dataclass(frozen=True)
class SamplerMethod:
    kind: str = "exact"
    m: int = DEFAULT_GRID

    def __post_init__(self):
        if self.kind not in METHODS:
            raise ValueError(f"unknown sampler method {self.kind!r}; choose from {METHODS}")
        if self.m < 1:
            raise ValueError("grid size m must be positive")

    @classmethod
    def parse(cls, text) -> "SamplerMethod":
        """Accept a SamplerMethod, ``"exact"``, ``"rejection"``, ``"grid"`` or ``"grid:4096"``."""
        if isinstance(text, SamplerMethod):
            return text
        kind, _, m = str(text).partition(":")
        return cls(kind, int(m) if m else DEFAULT_GRID)

    def __str__(self):
        return f"grid:{self.m}" if self.kind == "grid" else self.kind


def supports_exact(g: Graphon) -> bool:
    return isinstance(g, (ConstantGraphon, ProductGraphon, BlockGraphon))


def _check_exact(g):
    if not supports_exact(g):
        raise ValueError(f"exact sampling is not available for {g.describe()}; use rejection or grid")


@dataclass
class ChainTrajectory:
    seed: int
    points: np.ndarray
    kernel_id: str = ""
    method: str = "exact"

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 1 or self.points.size < 1:
            raise ValueError("a trajectory needs at least one point")
        if self.points.min() < 0.0 or self.points.max() > 1.0:
            raise ValueError("trajectory points must lie in [0, 1]")

    @property
    def N(self) -> int:
        """Number of transitions (pairs (X_{m-1}, X_m))."""
        return self.points.size - 1

    def extend(self, other_points) -> "ChainTrajectory":
        return ChainTrajectory(self.seed, np.concatenate([self.points, other_points]), self.kernel_id, self.method)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["m", "x"])
            for m, x in enumerate(self.points.tolist()):
                w.writerow([m, repr(x)])

    @classmethod
    def from_csv(cls, path, seed=0, kernel_id="", method="exact"):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(seed, np.array([float(r["x"]) for r in rows]), kernel_id, method)


# --- piecewise-constant chains ----------------------------------------------


@dataclass(frozen=True)
class _PiecewiseChain:
    """Chain on the blocks of a partition, uniform within blocks."""

    cuts: np.ndarray
    cum_init: np.ndarray
    cum_P: np.ndarray = field(repr=False)


def _cumulate(probs):
    cum = np.cumsum(probs, axis=-1)
    cum /= cum[..., -1:]
    return cum


def _block_chain(g: BlockGraphon) -> _PiecewiseChain:
    V, w = np.asarray(g.values), g.widths
    mass_rows = V * w[None, :]
    init = w * g.row_degrees
    if np.any(init <= 0.0):
        raise ValueError("a block with zero degree makes the chain undefined")
    return _PiecewiseChain(g.cuts, _cumulate(init), _cumulate(mass_rows))


def _grid_chain(g: Graphon, m: int) -> _PiecewiseChain:
    B = g.bin_average(m, grid_quadrature(m)).values
    rows = B.sum(axis=1)
    if np.any(rows <= 0.0):
        raise ValueError("grid discretization has a zero row; kernel vanishes on a bin")
    return _PiecewiseChain(np.linspace(0.0, 1.0, m + 1), _cumulate(rows), _cumulate(B))


@_accel.njit
def _walk_numba(cuts, cum_init, cum_P, u_state, u_pos):
    k = cum_init.shape[0]
    out = np.empty(u_state.shape[0])
    s = min(np.searchsorted(cum_init, u_state[0], side="right"), k - 1)
    out[0] = cuts[s] + u_pos[0] * (cuts[s + 1] - cuts[s])
    for t in range(1, u_state.shape[0]):
        s = min(np.searchsorted(cum_P[s], u_state[t], side="right"), k - 1)
        out[t] = cuts[s] + u_pos[t] * (cuts[s + 1] - cuts[s])
    return out


def _walk_numpy(cuts, cum_init, cum_P, u_state, u_pos):
    k = cum_init.shape[0]
    states = np.empty(u_state.shape[0], dtype=np.int64)
    s = min(int(np.searchsorted(cum_init, u_state[0], side="right")), k - 1)
    states[0] = s
    for t in range(1, u_state.shape[0]):
        s = min(int(np.searchsorted(cum_P[s], u_state[t], side="right")), k - 1)
        states[t] = s
    lo = cuts[states]
    return lo + u_pos * (cuts[states + 1] - lo)


walk_numba = _walk_numba
walk_numpy = _walk_numpy
chain_walk = _accel.select(_walk_numba, _walk_numpy)


def _run_chain(chain: _PiecewiseChain, N, rng, walk=None):
    u_state = rng.random(N + 1)
    u_pos = rng.random(N + 1)
    walk = walk or chain_walk
    return np.clip(walk(chain.cuts, chain.cum_init, chain.cum_P, u_state, u_pos), 0.0, 1.0)


# --- single draws -------------------------------------------------------------


def _uniform_in_block(cuts, blocks, u):
    lo = cuts[blocks]
    return lo + u * (cuts[blocks + 1] - lo)


def _draw_initial_exact(g, rng, size):
    _check_exact(g)
    if isinstance(g, ConstantGraphon):
        g._mass_or_raise()
        return rng.random(size)
    if isinstance(g, ProductGraphon):
        g._mass_or_raise()
        return g.stationary_ppf(rng.random(size))
    chain = _block_chain(g)
    blocks = np.minimum(np.searchsorted(chain.cum_init, rng.random(size), side="right"), len(chain.cum_init) - 1)
    return _uniform_in_block(chain.cuts, blocks, rng.random(size))


def _draw_initial_grid(g, rng, size, m):
    chain = _grid_chain(g, m)
    bins = np.minimum(np.searchsorted(chain.cum_init, rng.random(size), side="right"), m - 1)
    return _uniform_in_block(chain.cuts, bins, rng.random(size))


def sample_initial(g: Graphon, rng: np.random.Generator, method="exact", size=None):
    """Draw from the stationary law d(x) / ||kappa||_1.

    The rejection method has no envelope for pi, so it falls back to the exact
    draw when the family supports one and to the grid draw otherwise.
    """
    method = SamplerMethod.parse(method)
    n = 1 if size is None else size
    if method.kind == "grid" or (method.kind == "rejection" and not supports_exact(g)):
        out = _draw_initial_grid(g, rng, n, method.m)
    else:
        out = _draw_initial_exact(g, rng, n)
    return float(out[0]) if size is None else out


def _transitions_exact(g, xs, rng):
    _check_exact(g)
    if isinstance(g, ConstantGraphon):
        return rng.random(xs.shape)
    if isinstance(g, ProductGraphon):
        return g.stationary_ppf(rng.random(xs.shape))
    chain = _block_chain(g)
    src = g.block_of(xs)
    u = rng.random(xs.shape)
    k = len(chain.cum_init)
    dst = np.array([min(np.searchsorted(chain.cum_P[s], ui, side="right"), k - 1) for s, ui in zip(src.ravel(), u.ravel())],
                   dtype=np.int64).reshape(xs.shape)
    return _uniform_in_block(chain.cuts, dst, rng.random(xs.shape))


def _transitions_grid(g, xs, rng, m):
    bins = np.minimum(np.floor(xs * m).astype(np.int64), m - 1)
    uniq, inv = np.unique(bins, return_inverse=True)
    rows = g.bin_average_rows(m, uniq, grid_quadrature(m))
    cum = _cumulate(rows)
    u = rng.random(xs.shape).ravel()
    inv = inv.ravel()
    dst = np.empty(u.shape, dtype=np.int64)
    for r in range(len(uniq)):
        sel = inv == r
        dst[sel] = np.searchsorted(cum[r], u[sel], side="right")
    dst = np.minimum(dst, m - 1).reshape(xs.shape)
    edges = np.linspace(0.0, 1.0, m + 1)
    return _uniform_in_block(edges, dst, rng.random(xs.shape))


def _transitions_rejection(g, xs, rng, cert: K1Certificate):
    flat = xs.ravel()
    d = np.asarray(g.degree(flat), dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("transition undefined where d(x) = 0")
    out = np.empty_like(flat)
    pending = np.arange(flat.size)
    trials = 0
    while pending.size:
        trials += 1
        if trials > MAX_REJECTION_TRIALS:
            raise CertificateViolation(f"rejection sampler exceeded {MAX_REJECTION_TRIALS} trials")
        y = cert.phi.ppf(rng.random(pending.size))
        ratio = g._eval(flat[pending], y) / (d[pending] * cert.phi(y))
        if np.any(ratio > 1.0 + 1e-12):
            raise CertificateViolation("acceptance ratio exceeds one: the (K1) envelope does not dominate the kernel")
        accept = rng.random(pending.size) < ratio
        out[pending[accept]] = y[accept]
        pending = pending[~accept]
    return out.reshape(xs.shape)


def _rejection_chain(g, cert, x0, N, rng, batch=8, buffer=1 << 14):
    """Sequential rejection sampling with proposals drawn ahead in bulk."""
    pts = np.empty(N + 1)
    pts[0] = x0
    ys = phis = us = None
    pos = buffer
    for t in range(1, N + 1):
        x = pts[t - 1]
        d = float(g.degree(np.array([x]))[0])
        if d <= 0.0:
            raise ValueError("transition undefined where d(x) = 0")
        trials = 0
        while True:
            if pos + batch > buffer:
                ys = cert.phi.ppf(rng.random(buffer))
                phis = cert.phi(ys)
                us = rng.random(buffer)
                pos = 0
            y = ys[pos:pos + batch]
            ratio = g._eval(np.full(batch, x), y) / (d * phis[pos:pos + batch])
            if np.any(ratio > 1.0 + 1e-12):
                raise CertificateViolation("acceptance ratio exceeds one: the (K1) envelope does not dominate the kernel")
            acc = np.flatnonzero(us[pos:pos + batch] < ratio)
            if acc.size:
                pts[t] = y[acc[0]]
                pos += acc[0] + 1
                break
            pos += batch
            trials += batch
            if trials > MAX_REJECTION_TRIALS:
                raise CertificateViolation(f"rejection sampler exceeded {MAX_REJECTION_TRIALS} trials")
    return pts


def _certificate_for(g, cert):
    cert = cert if cert is not None else g.certificate()
    if cert is None:
        raise ValueError(f"rejection sampling needs a (K1) certificate for {g.describe()}")
    return cert


def sample_transitions(g: Graphon, xs, method="exact", rng=None, cert=None):
    """One transition from each point of ``xs`` (vectorised)."""
    method = SamplerMethod.parse(method)
    rng = rng if rng is not None else np.random.default_rng()
    xs = np.asarray(xs, dtype=float)
    if xs.size and (xs.min() < 0.0 or xs.max() > 1.0):
        raise ValueError("transition source must lie in [0, 1]")
    if method.kind == "exact":
        return _transitions_exact(g, xs, rng)
    if method.kind == "grid":
        return _transitions_grid(g, xs, rng, method.m)
    return _transitions_rejection(g, xs, rng, _certificate_for(g, cert))


def sample_transition(g: Graphon, x: float, method="exact", rng=None, cert=None) -> float:
    return float(sample_transitions(g, np.array([x]), method, rng, cert)[0])


def sample_trajectory(g: Graphon, N: int, seed: int, method="exact", cert=None) -> ChainTrajectory:
    """X_0 ~ pi followed by N transitions; deterministic in (seed, method, kernel)."""
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    N = int(N)
    method = SamplerMethod.parse(method)
    rng = make_rng(seed)
    if method.kind == "exact":
        _check_exact(g)
        if isinstance(g, ConstantGraphon):
            g._mass_or_raise()
            pts = rng.random(N + 1)
        elif isinstance(g, ProductGraphon):
            g._mass_or_raise()
            pts = g.stationary_ppf(rng.random(N + 1))
        else:
            pts = _run_chain(_block_chain(g), N, rng)
    elif method.kind == "grid":
        pts = _run_chain(_grid_chain(g, method.m), N, rng)
    else:
        cert = _certificate_for(g, cert)
        pts = _rejection_chain(g, cert, sample_initial(g, rng, method), N, rng)
    return ChainTrajectory(int(seed), pts, g.describe(), str(method))
