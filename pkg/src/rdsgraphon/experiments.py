"""
Reproducible convergence experiments and their CSV / SVG outputs.

Every (n, replicate) task draws its trajectory from its own stream seed
``mix(master_seed, replicate, tag_of("trajectory/n=<n>"))``, so tasks can run in
any order or concurrently and the emitted rows depend only on the config.
"""

from __future__ import annotations

import contextlib
import csv
import dataclasses
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cutnorm import EXACT_LIMIT, cut_distance
from .graph import build_rds_graph, scale, to_step_graphon
from .graphon import Graphon, bin_average, l1_distance, normalize, parse_kernel_spec, poissonize
from .oracles import discretize, expected_graph, h_graph, lemma2_aggregate
from .sampler import SamplerMethod, sample_trajectory
from .seeding import mix, tag_of

__all__ = [
    "ExperimentConfig",
    "ConvergenceRecord",
    "n_to_N",
    "run_theorem1",
    "run_dense",
    "run_lemma_suite",
    "emit_csv",
    "emit_svg",
    "CSV_HEADER",
    "load_config",
]

CSV_HEADER = ["n", "N", "replicate", "seed", "d_cut", "d_cut_exact", "d1", "edge_count", "runtime_ms"]


@dataclass
class ExperimentConfig:
    kernel: str = "kind=product a=1.0 b=1.0"
    alpha: float = 0.5
    lam: float = 1.0
    n_list: tuple = (8, 12, 16, 20, 24)
    replicates: int = 5
    master_seed: int = 0
    sampler: str = "exact"
    cutnorm: str = "auto"
    exact_limit: int = EXACT_LIMIT
    restarts: int = 32
    oracle_multiplier: int = 1
    poisson_scale: str = "2lambda"
    workers: int = 1
    timing: bool = False
    output_csv: Optional[str] = None
    output_svg: Optional[str] = None

    def __post_init__(self):
        self.n_list = tuple(int(n) for n in self.n_list)
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ValueError("n_list must be a non-empty list of positive integers")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ValueError("n_list must be strictly increasing")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not self.lam > 0.0:
            raise ValueError("lambda must be positive")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.cutnorm not in {"auto", "exact", "heuristic"}:
            raise ValueError("cutnorm must be auto, exact or heuristic")
        if self.poisson_scale not in {"2lambda", "lambda"}:
            raise ValueError("poisson_scale must be '2lambda' or 'lambda'")
        if self.oracle_multiplier < 1:
            raise ValueError("oracle_multiplier must be positive")
        SamplerMethod.parse(self.sampler)

    def graphon(self) -> Graphon:
        return parse_kernel_spec(self.kernel)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_ALIASES = {"lambda": "lam", "seed": "master_seed"}


def _coerce(name, raw):
    f = {f.name: f for f in dataclasses.fields(ExperimentConfig)}[name]
    default = f.default
    if name == "n_list":
        return tuple(int(v) for v in str(raw).replace(" ", "").split(",") if v)
    if isinstance(default, bool):
        return str(raw).strip().lower() in {"1", "true", "yes", "on"}
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return None if raw in ("", "none", "None") else str(raw)


def config_from_mapping(values: dict, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    changes = {}
    for key, raw in values.items():
        name = _ALIASES.get(key, key).replace("-", "_")
        if name not in known:
            raise ValueError(f"unknown config key {key!r}")
        changes[name] = _coerce(name, raw)
    return dataclasses.replace(base or ExperimentConfig(), **changes)


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Read ``key = value`` lines (``#`` starts a comment)."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return config_from_mapping(values, base)


@dataclass(frozen=True)
class ConvergenceRecord:
    n: int
    N: int
    replicate: int
    seed: int
    d_cut: float
    d_cut_exact: bool
    d1: float
    edge_count: int
    runtime_ms: float = 0.0

    def row(self):
        return [
            self.n, self.N, self.replicate, self.seed, repr(float(self.d_cut)),
            "true" if self.d_cut_exact else "false", repr(float(self.d1)), self.edge_count,
            repr(round(float(self.runtime_ms), 3)),
        ]


def n_to_N(n: int, alpha: float, lam: float) -> int:
    """round(lambda * n^(1 + alpha)), at least 1 (halves round up)."""
    return max(1, int(math.floor(lam * n ** (1.0 + alpha) + 0.5)))


def trajectory_seed(cfg: ExperimentConfig, n: int, replicate: int) -> int:
    return mix(cfg.master_seed, replicate, tag_of(f"trajectory/n={n}"))


def _cut(cfg, a, b, seed=0):
    res = cut_distance(a, b, method=cfg.cutnorm, exact_limit=cfg.exact_limit, restarts=cfg.restarts, seed=seed)
    return res.value, res.method == "exact"


def _run_tasks(cfg, fn, tasks):
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            out = list(pool.map(lambda t: fn(*t), tasks))
    else:
        out = [fn(*t) for t in tasks]
    return sorted(out, key=lambda r: (r[0].n, r[0].replicate))


def _timed(cfg, start):
    return (time.perf_counter() - start) * 1e3 if cfg.timing else 0.0


def _sampled_graph(cfg, g, n, N, replicate):
    seed = trajectory_seed(cfg, n, replicate)
    traj = sample_trajectory(g, N, seed, cfg.sampler)
    G = build_rds_graph(traj, n)
    return seed, G, to_step_graphon(scale(G, n ** 2 / N))


def _median_by_n(records, attr="d_cut", extra=None):
    rows = []
    for n in sorted({r.n for r in records}):
        sel = [r for r in records if r.n == n]
        row = {
            "n": n,
            "N": sel[0].N,
            "median_d_cut": float(np.median([getattr(r, attr) for r in sel])),
            "median_d1": float(np.median([r.d1 for r in sel])),
            "all_exact": all(r.d_cut_exact for r in sel),
        }
        if extra:
            row.update(extra.get(n, {}))
        rows.append(row)
    return rows


def discretization_residual(gbar: Graphon, n: int) -> float:
    """l1 between the n-bin average and the 4n-bin average on the 4n partition."""
    coarse = bin_average(gbar, n).refine(4)
    return l1_distance(coarse, bin_average(gbar, 4 * n))


def run_theorem1(cfg: ExperimentConfig):
    """Distance from (n^2/N) G_n to the bin-averaged normalized kernel, sparse regime."""
    if not cfg.alpha < 1.0:
        raise ValueError("the sparse-regime experiment needs alpha < 1; use run_dense for alpha = 1")
    g = cfg.graphon()
    gbar = normalize(g)
    targets = {n: bin_average(gbar, n) for n in cfg.n_list}

    def task(n, rep):
        start = time.perf_counter()
        N = n_to_N(n, cfg.alpha, cfg.lam)
        seed, G, step = _sampled_graph(cfg, g, n, N, rep)
        d_cut, exact = _cut(cfg, step, targets[n], seed)
        rec = ConvergenceRecord(n, N, rep, seed, d_cut, exact, l1_distance(step, targets[n]), G.edge_count,
                                _timed(cfg, start))
        return (rec,)

    out = _run_tasks(cfg, task, [(n, r) for n in cfg.n_list for r in range(cfg.replicates)])
    records = [o[0] for o in out]
    extra = {n: {"residual": discretization_residual(gbar, n)} for n in cfg.n_list}
    return records, {"experiment": "theorem1", "by_n": _median_by_n(records, extra=extra)}


def poisson_target(gbar: Graphon, cfg: ExperimentConfig) -> Graphon:
    c = 2.0 * cfg.lam if cfg.poisson_scale == "2lambda" else cfg.lam
    return poissonize(gbar, c)


def run_dense(cfg: ExperimentConfig):
    """Dense regime: distance to the Poissonized kernel, with the plain kernel for contrast."""
    if cfg.alpha != 1.0:
        raise ValueError("the dense-regime experiment needs alpha = 1")
    g = cfg.graphon()
    gbar = normalize(g)
    target_graphon = poisson_target(gbar, cfg)
    targets = {n: bin_average(target_graphon, n) for n in cfg.n_list}
    plain = {n: bin_average(gbar, n) for n in cfg.n_list}

    def task(n, rep):
        start = time.perf_counter()
        N = n_to_N(n, cfg.alpha, cfg.lam)
        seed, G, step = _sampled_graph(cfg, g, n, N, rep)
        d_cut, exact = _cut(cfg, step, targets[n], seed)
        contrast, _ = _cut(cfg, step, plain[n], seed)
        rec = ConvergenceRecord(n, N, rep, seed, d_cut, exact, l1_distance(step, targets[n]), G.edge_count,
                                _timed(cfg, start))
        return rec, contrast

    out = _run_tasks(cfg, task, [(n, r) for n in cfg.n_list for r in range(cfg.replicates)])
    records = [o[0] for o in out]
    contrast = {}
    for rec, c in out:
        contrast.setdefault(rec.n, []).append(c)
    extra = {n: {"d_cut_to_plain": v, "median_d_cut_to_plain": float(np.median(v))} for n, v in contrast.items()}
    return records, {"experiment": "dense", "by_n": _median_by_n(records, extra=extra)}


def _oracle_chain(cfg, g, n, require_model_match):
    chain = discretize(g, n * cfg.oracle_multiplier)
    if require_model_match and not chain.exact:
        method = SamplerMethod.parse(cfg.sampler)
        if not (method.kind == "grid" and method.m == chain.m):
            raise ValueError(
                f"no exact finite chain for {g.describe()} at m={chain.m}; use a block kernel with aligned cuts "
                f"or sampler=grid:{chain.m} so the sampled chain matches the oracle"
            )
    return chain


def run_lemma_suite(cfg: ExperimentConfig, which: str):
    """L1: concentration of G_n around E G_n; L2: E G_n vs H_n with its bound; L3: H_n vs the kernel."""
    which = which.upper()
    if which == "L1":
        return _lemma1(cfg)
    if which == "L2":
        return _lemma2(cfg)
    if which == "L3":
        return _lemma3(cfg)
    raise ValueError(f"unknown lemma {which!r}; choose L1, L2 or L3")


def _lemma1(cfg):
    g = cfg.graphon()
    chains = {n: _oracle_chain(cfg, g, n, require_model_match=True) for n in cfg.n_list}
    means = {}
    for n in cfg.n_list:
        N = n_to_N(n, cfg.alpha, cfg.lam)
        means[n] = to_step_graphon(scale(expected_graph(chains[n], n, N), n ** 2 / N))

    def task(n, rep):
        start = time.perf_counter()
        N = n_to_N(n, cfg.alpha, cfg.lam)
        seed, G, step = _sampled_graph(cfg, g, n, N, rep)
        d_cut, exact = _cut(cfg, step, means[n], seed)
        return (ConvergenceRecord(n, N, rep, seed, d_cut, exact, l1_distance(step, means[n]), G.edge_count,
                                  _timed(cfg, start)),)

    out = _run_tasks(cfg, task, [(n, r) for n in cfg.n_list for r in range(cfg.replicates)])
    records = [o[0] for o in out]
    return records, {"experiment": "L1", "by_n": _median_by_n(records)}


def _lemma2(cfg):
    g = cfg.graphon()
    gbar = normalize(g)
    cert = g.certificate()
    if cert is None:
        raise ValueError(f"{g.describe()} has no (K1) certificate; the L2 bound needs one")
    records, extra = [], {}
    for n in cfg.n_list:
        start = time.perf_counter()
        N = n_to_N(n, cfg.alpha, cfg.lam)
        chain = _oracle_chain(cfg, gbar, n, require_model_match=False)
        agg = lemma2_aggregate(gbar, cert, n, N, chain=chain)
        EG = expected_graph(chain, n, N)
        d_cut, exact = _cut(cfg, to_step_graphon(scale(EG, n ** 2 / N)), to_step_graphon(h_graph(gbar, n, N)))
        records.append(ConvergenceRecord(n, N, 0, 0, d_cut, exact, agg.d1_exact, EG.edge_count, _timed(cfg, start)))
        extra[n] = {"bound": agg.bound, "closed_form_bound": agg.closed_form_bound, "oracle_exact": chain.exact}
    return records, {"experiment": "L2", "by_n": _median_by_n(records, extra=extra)}


def _lemma3(cfg):
    gbar = normalize(cfg.graphon())
    records, extra = [], {}
    for n in cfg.n_list:
        start = time.perf_counter()
        N = n_to_N(n, cfg.alpha, cfg.lam)
        H = to_step_graphon(h_graph(gbar, n, N))
        target = bin_average(gbar, n)
        d_cut, exact = _cut(cfg, H, target)
        records.append(ConvergenceRecord(n, N, 0, 0, d_cut, exact, l1_distance(H, target),
                                         int(np.count_nonzero(np.triu(H.values, 1))), _timed(cfg, start)))
        extra[n] = {"residual": discretization_residual(gbar, n)}
    return records, {"experiment": "L3", "by_n": _median_by_n(records, extra=extra)}


# --- output -------------------------------------------------------------------


def emit_csv(records, path):
    """Write records under the fixed header; ``path="-"`` writes to stdout."""
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(r.row())


@contextlib.contextmanager
def _open_out(path):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def emit_svg(summary, path):
    """Log-log line chart of the median cut distance against n."""
    rows = summary.get("by_n", []) if summary else []
    if not rows:
        raise ValueError("nothing to plot: the summary has no records")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = [r["n"] for r in rows]
    with matplotlib.rc_context({"svg.hashsalt": "rdsgraphon", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.loglog(ns, [r["median_d_cut"] for r in rows], "o-", label="median d_cut")
        ax.loglog(ns, [r["median_d1"] for r in rows], "s--", label="median d1")
        ax.set_xlabel("n")
        ax.set_ylabel("distance")
        ax.set_title(summary.get("experiment", ""))
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
