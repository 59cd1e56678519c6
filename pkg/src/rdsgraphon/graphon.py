"""
Graphons on the unit square: built-in analytic families, step functions,
bin averages, L1 distance, Poissonization, and (K1) certificates.

Every built-in family (constant, product, block, step) has closed forms for
the degree function, the total mass and the bin averages, so that the
quadrature paths can be checked against exact values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "DomainError",
    "ZeroMassError",
    "Graphon",
    "ConstantGraphon",
    "ProductGraphon",
    "BlockGraphon",
    "StepGraphon",
    "FunctionGraphon",
    "PiecewiseLinear",
    "K1Certificate",
    "K1Report",
    "eval_graphon",
    "total_mass",
    "normalize",
    "bin_average",
    "l1_distance",
    "poissonize",
    "verify_k1",
    "midpoint_total_mass",
    "midpoint_degree",
    "parse_kernel_spec",
    "save_step_csv",
    "load_step_csv",
]

DEFAULT_QUADRATURE = 32
GRID_RESOLUTION = 4096
K1_TOLERANCE = 1e-12


class DomainError(ValueError):
    """A coordinate outside [0, 1] was passed to a graphon."""


class ZeroMassError(ValueError):
    """The graphon integrates to zero, so it cannot be normalized."""


def _check_unit(*arrays):
    for a in arrays:
        a = np.asarray(a, dtype=float)
        if a.size and (np.any(~np.isfinite(a)) or a.min() < 0.0 or a.max() > 1.0):
            raise DomainError("graphon coordinates must lie in [0, 1]")


# kernel evaluations per quadrature chunk; bounds memory at about 64 MB
_EVAL_BUDGET = 1 << 23


def grid_quadrature(m: int) -> int:
    """Points per bin for m-bin chains on generic kernels: about 4096 per axis in total."""
    return max(2, GRID_RESOLUTION // m)


def _midpoints(q):
    return (np.arange(q) + 0.5) / q


def _overlaps(n, cuts):
    """Overlap lengths between the equal n-partition and a partition given by ``cuts``."""
    edges = np.linspace(0.0, 1.0, n + 1)
    lo = np.maximum(edges[:-1, None], cuts[None, :-1])
    hi = np.minimum(edges[1:, None], cuts[None, 1:])
    return np.clip(hi - lo, 0.0, None)


class Graphon:
    """Symmetric nonnegative kernel on [0,1]^2.

    Subclasses implement ``_eval`` (vectorised, no range checks), ``degree``
    and ``total_mass``; ``bin_average`` defaults to a midpoint tensor rule.
    """

    kind = "generic"

    def __call__(self, x, y):
        _check_unit(x, y)
        return self._eval(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def _eval(self, x, y):
        raise NotImplementedError

    def degree(self, x):
        """d(x) = integral of kappa(x, z) over z."""
        raise NotImplementedError

    def total_mass(self) -> float:
        raise NotImplementedError

    def bin_average(self, n: int, q: int = DEFAULT_QUADRATURE) -> "StepGraphon":
        n = _positive_int(n, "n")
        vals = np.empty((n, n))
        step = max(1, _EVAL_BUDGET // (n * q * q))
        for start in range(0, n, step):
            rows = np.arange(start, min(start + step, n))
            vals[rows] = self.bin_average_rows(n, rows, q)
        return StepGraphon(0.5 * (vals + vals.T))

    def bin_average_rows(self, n: int, rows, q: int = DEFAULT_QUADRATURE):
        """Selected rows of the bin-average matrix, without forming the full matrix."""
        rows = np.asarray(rows, dtype=np.int64)
        x = (rows[:, None] + _midpoints(q)[None, :]) / n
        y = _midpoints(n * q)
        vals = self._eval(x[:, :, None, None], y.reshape(n, q)[None, None])
        return vals.mean(axis=(1, 3))

    def scaled(self, c: float) -> "Graphon":
        base = self
        return FunctionGraphon(lambda x, y: c * base._eval(x, y), name=f"{c!r}*({self.describe()})")

    def certificate(self) -> Optional["K1Certificate"]:
        """Analytic (K1) certificate, or None if the family does not ship one."""
        return None

    def describe(self) -> str:
        return self.kind

    def _mass_or_raise(self):
        mass = float(self.total_mass())
        if not mass > 0.0:
            raise ZeroMassError(f"graphon {self.describe()} has total mass {mass}")
        return mass


class ConstantGraphon(Graphon):
    kind = "constant"

    def __init__(self, c: float):
        c = float(c)
        if not (np.isfinite(c) and c >= 0.0):
            raise ValueError(f"constant graphon needs c >= 0, got {c}")
        self.c = c

    def _eval(self, x, y):
        return np.full(np.broadcast(x, y).shape, self.c)

    def degree(self, x):
        x = np.asarray(x, dtype=float)
        _check_unit(x)
        return np.full(x.shape, self.c)

    def total_mass(self):
        return self.c

    def bin_average(self, n, q=DEFAULT_QUADRATURE):
        n = _positive_int(n, "n")
        return StepGraphon(np.full((n, n), self.c))

    def bin_average_rows(self, n, rows, q=DEFAULT_QUADRATURE):
        return np.full((len(rows), n), self.c)

    def scaled(self, c):
        return ConstantGraphon(self.c * c)

    def certificate(self):
        if self.c <= 0.0:
            return None
        return K1Certificate(1.0, PiecewiseLinear.constant(1.0))

    def describe(self):
        return f"kind=constant c={self.c!r}"


class ProductGraphon(Graphon):
    """kappa(x, y) = f(x) f(y) with f(x) = a + b x."""

    kind = "product"

    def __init__(self, a: float = 1.0, b: float = 1.0):
        a, b = float(a), float(b)
        if a < 0.0 or a + b < 0.0:
            raise ValueError("product graphon needs f(x) = a + b x >= 0 on [0, 1]")
        self.a, self.b = a, b

    @property
    def f_integral(self):
        return self.a + 0.5 * self.b

    def f(self, x):
        return self.a + self.b * np.asarray(x, dtype=float)

    def _eval(self, x, y):
        return self.f(x) * self.f(y)

    def degree(self, x):
        _check_unit(x)
        return self.f(x) * self.f_integral

    def total_mass(self):
        return self.f_integral ** 2

    def bin_means(self, n):
        # n * integral of f over A_{n,i} = f at the bin midpoint (f is linear)
        return self.f(_midpoints(n))

    def bin_average(self, n, q=DEFAULT_QUADRATURE):
        n = _positive_int(n, "n")
        m = self.bin_means(n)
        return StepGraphon(np.outer(m, m))

    def bin_average_rows(self, n, rows, q=DEFAULT_QUADRATURE):
        m = self.bin_means(n)
        return np.outer(m[np.asarray(rows, dtype=np.int64)], m)

    def scaled(self, c):
        if c < 0:
            raise ValueError("cannot scale a product graphon by a negative factor")
        s = np.sqrt(c)
        return ProductGraphon(self.a * s, self.b * s)

    def stationary_ppf(self, u):
        """Inverse CDF of the density f / integral(f) (also the transition law)."""
        u = np.asarray(u, dtype=float)
        target = u * self.f_integral
        denom = self.a + np.sqrt(self.a ** 2 + 2.0 * self.b * target)
        with np.errstate(invalid="ignore", divide="ignore"):
            y = np.where(denom > 0.0, 2.0 * target / denom, 0.0)
        return np.clip(y, 0.0, 1.0)

    def certificate(self):
        lo = min(self.a, self.a + self.b)
        if lo <= 0.0:
            return None
        F = self.f_integral
        return K1Certificate(lo / F, PiecewiseLinear([0.0, 1.0], [self.a / F], [self.b / F]))

    def describe(self):
        return f"kind=product a={self.a!r} b={self.b!r}"


class BlockGraphon(Graphon):
    """Piecewise-constant kernel on an arbitrary finite partition of [0, 1]."""

    kind = "block"

    def __init__(self, cuts, values):
        cuts = np.array(cuts, dtype=float)
        values = np.array(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("block values must be a square matrix")
        k = values.shape[0]
        if cuts.shape != (k + 1,):
            raise ValueError(f"{k} blocks need {k + 1} cut points, got {cuts.shape[0]}")
        if cuts[0] != 0.0 or cuts[-1] != 1.0 or np.any(np.diff(cuts) <= 0.0):
            raise ValueError("cuts must increase strictly from 0 to 1")
        if not np.allclose(values, values.T, rtol=0.0, atol=1e-12):
            raise ValueError("block values must be symmetric")
        if np.any(values < 0.0) or not np.all(np.isfinite(values)):
            raise ValueError("block values must be finite and nonnegative")
        self.cuts = cuts
        self.values = values
        self.cuts.setflags(write=False)
        self.values.setflags(write=False)

    @property
    def widths(self):
        return np.diff(self.cuts)

    @property
    def row_degrees(self):
        """Degree on each block: sum_b values[a, b] * width_b."""
        return self.values @ self.widths

    def block_of(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.cuts, x, side="right") - 1
        return np.clip(idx, 0, len(self.widths) - 1)

    def _eval(self, x, y):
        return self.values[self.block_of(x), self.block_of(y)]

    def degree(self, x):
        _check_unit(x)
        return self.row_degrees[self.block_of(x)]

    def total_mass(self):
        return float(self.widths @ self.values @ self.widths)

    def bin_average(self, n, q=DEFAULT_QUADRATURE):
        n = _positive_int(n, "n")
        W = _overlaps(n, self.cuts) * n
        vals = W @ self.values @ W.T
        return StepGraphon(0.5 * (vals + vals.T))

    def bin_average_rows(self, n, rows, q=DEFAULT_QUADRATURE):
        W = _overlaps(n, self.cuts) * n
        return W[np.asarray(rows, dtype=np.int64)] @ self.values @ W.T

    def scaled(self, c):
        return BlockGraphon(self.cuts, self.values * c)

    def certificate(self):
        r = self.row_degrees
        if np.any(r <= 0.0):
            return None
        ratio = self.values / r[:, None]
        delta = float(ratio.min())
        if delta <= 0.0:
            return None
        env = ratio.max(axis=0)
        return K1Certificate(delta, PiecewiseLinear(self.cuts, env, np.zeros_like(env)))

    def describe(self):
        cuts = ",".join(repr(float(c)) for c in self.cuts)
        vals = ";".join(",".join(repr(float(v)) for v in row) for row in self.values)
        return f"kind=block cuts={cuts} values={vals}"


class StepGraphon(BlockGraphon):
    """n x n symmetric nonnegative matrix, constant on the equal bins A_{n,i} x A_{n,j}."""

    kind = "step"

    def __init__(self, values):
        values = np.array(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1] or values.shape[0] < 1:
            raise ValueError("step graphon values must be a non-empty square matrix")
        super().__init__(np.linspace(0.0, 1.0, values.shape[0] + 1), values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def block_of(self, x):
        n = self.n
        return np.minimum(np.floor(np.asarray(x, dtype=float) * n).astype(np.int64), n - 1)

    def bin_average(self, n, q=DEFAULT_QUADRATURE):
        n = _positive_int(n, "n")
        if n == self.n:
            return self
        if n % self.n == 0:
            return self.refine(n // self.n)
        return super().bin_average(n, q)

    def bin_average_rows(self, n, rows, q=DEFAULT_QUADRATURE):
        if n == self.n:
            return self.values[np.asarray(rows, dtype=np.int64)]
        return super().bin_average_rows(n, rows, q)

    def refine(self, k: int) -> "StepGraphon":
        """The same function written on the n*k equal partition."""
        k = _positive_int(k, "k")
        return StepGraphon(np.kron(self.values, np.ones((k, k))))

    def scaled(self, c):
        return StepGraphon(self.values * c)

    def describe(self):
        return f"kind=step n={self.n}"

    def __eq__(self, other):
        return isinstance(other, StepGraphon) and np.array_equal(self.values, other.values)

    __hash__ = None


class FunctionGraphon(Graphon):
    """A kernel given by a vectorised callable; integrals by midpoint quadrature."""

    kind = "function"

    def __init__(self, func: Callable, name: str = "function", resolution: int = 1024):
        self.func = func
        self.name = name
        self.resolution = resolution

    def _eval(self, x, y):
        return np.asarray(self.func(x, y), dtype=float) * np.ones(np.broadcast(x, y).shape)

    def degree(self, x):
        _check_unit(x)
        x = np.asarray(x, dtype=float)
        z = _midpoints(self.resolution)
        return self._eval(x[..., None], z).mean(axis=-1)

    def total_mass(self):
        return midpoint_total_mass(self, 512)

    def describe(self):
        return self.name


@dataclass(frozen=True)
class PiecewiseLinear:
    """Nonnegative piecewise-linear function on [0, 1].

    On piece p the value is ``start[p] + slope[p] * (y - cuts[p])``.
    """

    cuts: np.ndarray
    start: np.ndarray
    slope: np.ndarray

    def __init__(self, cuts, start, slope):
        object.__setattr__(self, "cuts", np.array(cuts, dtype=float))
        object.__setattr__(self, "start", np.array(start, dtype=float))
        object.__setattr__(self, "slope", np.array(slope, dtype=float))

    @classmethod
    def constant(cls, v):
        return cls([0.0, 1.0], [v], [0.0])

    def _piece(self, y):
        idx = np.searchsorted(self.cuts, y, side="right") - 1
        return np.clip(idx, 0, len(self.start) - 1)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        p = self._piece(y)
        return self.start[p] + self.slope[p] * (y - self.cuts[p])

    def integral(self, lo, hi):
        """Integral over [lo, hi] (vectorised over lo, hi)."""
        lo = np.asarray(lo, dtype=float)[..., None]
        hi = np.asarray(hi, dtype=float)[..., None]
        c0, c1 = self.cuts[:-1], self.cuts[1:]
        p = np.clip(np.maximum(lo, c0), None, c1)
        q = np.clip(np.minimum(hi, c1), c0, None)
        q = np.maximum(p, q)
        part = self.start * (q - p) + 0.5 * self.slope * ((q - c0) ** 2 - (p - c0) ** 2)
        return part.sum(axis=-1)

    def bin_integrals(self, n: int):
        edges = np.linspace(0.0, 1.0, n + 1)
        return self.integral(edges[:-1], edges[1:])

    @property
    def total(self) -> float:
        return float(self.integral(0.0, 1.0))

    def ppf(self, u):
        """Inverse CDF of the density proportional to this function."""
        u = np.asarray(u, dtype=float)
        masses = self.integral(self.cuts[:-1], self.cuts[1:])
        cum = np.concatenate([[0.0], np.cumsum(masses)])
        target = u * cum[-1]
        p = np.clip(np.searchsorted(cum, target, side="right") - 1, 0, len(masses) - 1)
        r = np.maximum(target - cum[p], 0.0)
        v0, s = self.start[p], self.slope[p]
        denom = v0 + np.sqrt(np.maximum(v0 * v0 + 2.0 * s * r, 0.0))
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(denom > 0.0, 2.0 * r / denom, 0.0)
        return np.clip(self.cuts[p] + t, self.cuts[p], self.cuts[p + 1])


@dataclass(frozen=True)
class K1Certificate:
    """Constants with delta <= kappa(x, y) / d(x) <= phi(y) for all x, y."""

    delta: float
    phi: PiecewiseLinear

    def __post_init__(self):
        if not self.delta > 0.0:
            raise ValueError("K1 certificate needs delta > 0")

    @property
    def phi_total(self) -> float:
        return self.phi.total

    def phi_bin_integrals(self, n: int):
        return self.phi.bin_integrals(n)


@dataclass(frozen=True)
class K1Report:
    min_ratio: float
    max_violation: float
    passed: bool


# --- module-level operations -------------------------------------------------


def _positive_int(n, name):
    if int(n) != n or n < 1:
        raise ValueError(f"{name} must be a positive integer, got {n!r}")
    return int(n)


def eval_graphon(g: Graphon, x, y):
    return g(x, y)


def total_mass(g: Graphon) -> float:
    """||kappa||_1; raises ZeroMassError when it vanishes."""
    return g._mass_or_raise()


def normalize(g: Graphon) -> Graphon:
    return g.scaled(1.0 / g._mass_or_raise())


def bin_average(g: Graphon, n: int, q: int = DEFAULT_QUADRATURE) -> StepGraphon:
    return g.bin_average(n, q)


def l1_distance(a: StepGraphon, b: StepGraphon) -> float:
    if a.n != b.n:
        raise ValueError(f"step graphons live on different partitions ({a.n} vs {b.n}); re-bin first")
    return float(np.abs(a.values - b.values).sum() / a.n ** 2)


def poissonize(g: Graphon, c: float) -> Graphon:
    """Pointwise (1 - exp(-c g)) / c; intended for a normalized g."""
    c = float(c)
    if not c > 0.0:
        raise ValueError(f"Poissonization scale must be positive, got {c}")

    def transform(v):
        return -np.expm1(-c * v) / c

    if isinstance(g, ConstantGraphon):
        return ConstantGraphon(transform(g.c))
    if isinstance(g, StepGraphon):
        return StepGraphon(transform(g.values))
    if isinstance(g, BlockGraphon):
        return BlockGraphon(g.cuts, transform(g.values))
    return FunctionGraphon(lambda x, y: transform(g._eval(x, y)), name=f"poissonize({g.describe()}, {c!r})")


def verify_k1(g: Graphon, cert: K1Certificate, grid: int = 64) -> K1Report:
    """Check delta <= kappa(x, y)/d(x) <= phi(y) on a grid x grid lattice of cell midpoints."""
    if grid < 2:
        raise ValueError("grid must be at least 2")
    pts = _midpoints(grid)
    d = np.asarray(g.degree(pts), dtype=float)
    K = g(pts[:, None], pts[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = K / d[:, None]
    bad_rows = ~(d > 0.0)
    ratio[bad_rows] = np.nan
    phi = cert.phi(pts)[None, :]
    violation = np.maximum(cert.delta - ratio, ratio - phi)
    violation = np.where(np.isnan(violation), np.inf, violation)
    max_violation = float(max(violation.max(), 0.0))
    min_ratio = float(np.nanmin(ratio)) if not bad_rows.all() else float("nan")
    return K1Report(min_ratio, max_violation, bool(max_violation <= K1_TOLERANCE))


def midpoint_total_mass(g: Graphon, q: int = 512) -> float:
    pts = _midpoints(q)
    return float(g._eval(pts[:, None], pts[None, :]).mean())


def midpoint_degree(g: Graphon, x, q: int = 1024):
    x = np.asarray(x, dtype=float)
    return g._eval(x[..., None], _midpoints(q)).mean(axis=-1)


def save_step_csv(step: StepGraphon, path):
    """Write the value matrix as CSV, one row per line, shortest round-trip floats."""
    with open(path, "w") as fh:
        for row in np.asarray(step.values, dtype=float).tolist():
            fh.write(",".join(repr(v) for v in row) + "\n")


def load_step_csv(path) -> StepGraphon:
    return StepGraphon(np.loadtxt(path, delimiter=",", ndmin=2))


# --- kernel specification text ----------------------------------------------


def parse_kernel_spec(text: str) -> Graphon:
    """Parse ``kind=... key=value ...`` into a graphon.

    >>> parse_kernel_spec("kind=block cuts=0,0.5,1 values=2,1;1,3").total_mass()
    1.75
    """
    fields = {}
    for tok in text.split():
        if "=" not in tok:
            raise ValueError(f"malformed kernel field {tok!r}; expected key=value")
        key, value = tok.split("=", 1)
        fields[key.strip()] = value.strip()
    kind = fields.pop("kind", None)
    try:
        if kind == "constant":
            g = ConstantGraphon(float(fields.pop("c", 1.0)))
        elif kind == "product":
            g = ProductGraphon(float(fields.pop("a", 1.0)), float(fields.pop("b", 1.0)))
        elif kind == "block":
            cuts = [float(v) for v in fields.pop("cuts").split(",")]
            values = [[float(v) for v in row.split(",")] for row in fields.pop("values").split(";")]
            g = BlockGraphon(cuts, values)
        elif kind == "step":
            g = load_step_csv(fields.pop("file"))
        else:
            raise ValueError(f"unknown kernel kind {kind!r}")
    except KeyError as exc:
        raise ValueError(f"kernel spec {text!r} is missing field {exc.args[0]!r}") from None
    if fields:
        raise ValueError(f"unknown kernel fields {sorted(fields)} for kind={kind}")
    return g
