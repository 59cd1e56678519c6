"""Command-line entry point: ``rdsgraphon <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys


from . import _accel
from .cutnorm import EXACT_LIMIT, cut_distance
from .experiments import (
    ExperimentConfig,
    config_from_mapping,
    emit_csv,
    emit_svg,
    load_config,
    run_dense,
    run_lemma_suite,
    run_theorem1,
)
from .graph import build_rds_graph, scale, to_step_graphon
from .graphon import load_step_csv, normalize, parse_kernel_spec, save_step_csv, verify_k1
from .oracles import discretize, oracle_report, write_oracle_csv
from .sampler import ChainTrajectory, sample_trajectory

_CONFIG_FLAGS = {
    "kernel": str,
    "alpha": float,
    "lambda": float,
    "n_list": str,
    "replicates": int,
    "seed": int,
    "sampler": str,
    "cutnorm": str,
    "exact_limit": int,
    "restarts": int,
    "oracle_multiplier": int,
    "poisson_scale": str,
    "workers": int,
}


def _add_config_args(p):
    p.add_argument("--config", help="key=value file with ExperimentConfig fields")
    for name, typ in _CONFIG_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    p.add_argument("--timing", action="store_true", help="record wall-clock runtime_ms (breaks byte-identical reruns)")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--svg", help="SVG chart output path")


def _config(args, **defaults) -> ExperimentConfig:
    base = ExperimentConfig(**defaults)
    if args.config:
        base = load_config(args.config, base)
    values = {k: getattr(args, k) for k in _CONFIG_FLAGS if getattr(args, k) is not None}
    if args.timing:
        values["timing"] = "true"
    if args.out:
        values["output_csv"] = args.out
    if args.svg:
        values["output_svg"] = args.svg
    return config_from_mapping(values, base)


def _finish(cfg, records, summary):
    """CSV to the --out file or stdout; the JSON summary goes to stderr when stdout carries the CSV."""
    csv_path = cfg.output_csv or "-"
    emit_csv(records, csv_path)
    if cfg.output_svg:
        emit_svg(summary, cfg.output_svg)
    print(json.dumps(summary, indent=2, sort_keys=True), file=sys.stderr if csv_path == "-" else sys.stdout)


def cmd_sample(args):
    g = parse_kernel_spec(args.kernel)
    traj = sample_trajectory(g, args.N, args.seed, args.method)
    if args.out:
        traj.to_csv(args.out)
    pts = traj.points
    print(f"N={traj.N} seed={traj.seed} method={traj.method} mean={pts.mean():.6f} min={pts.min():.6f} max={pts.max():.6f}")


def cmd_build_graph(args):
    if args.trajectory:
        traj = ChainTrajectory.from_csv(args.trajectory)
    else:
        traj = sample_trajectory(parse_kernel_spec(args.kernel), args.N, args.seed, args.method)
    G = build_rds_graph(traj, args.n)
    if args.scaled:
        G = scale(G, args.n ** 2 / traj.N)
    if args.out:
        G.to_csv(args.out)
    if args.step_out:
        save_step_csv(to_step_graphon(G), args.step_out)
    print(f"n={G.n} N={traj.N} edges={G.edge_count} density={G.edge_count / (G.n * (G.n - 1) / 2):.6f}")


def cmd_cutnorm(args):
    a, b = load_step_csv(args.a), load_step_csv(args.b)
    res = cut_distance(a, b, method=args.method, exact_limit=args.exact_limit, restarts=args.restarts, seed=args.seed)
    print(json.dumps({
        "value": res.value,
        "method": res.method,
        "upper_bound_d1": res.upper_bound,
        "S": [i + 1 for i in res.s_set],
        "T": [j + 1 for j in res.t_set],
    }, indent=2))


def cmd_theorem1(args):
    cfg = _config(args)
    _finish(cfg, *run_theorem1(cfg))


def cmd_dense(args):
    cfg = _config(args, alpha=1.0)
    _finish(cfg, *run_dense(cfg))


def cmd_lemma(args):
    cfg = _config(args)
    _finish(cfg, *run_lemma_suite(cfg, args.which))


def cmd_verify_k1(args):
    g = parse_kernel_spec(args.kernel)
    cert = g.certificate()
    if cert is None:
        print(json.dumps({"kernel": g.describe(), "pass": False, "reason": "no analytic (K1) certificate"}))
        return 1
    rep = verify_k1(g, cert, args.grid)
    print(json.dumps({
        "kernel": g.describe(),
        "delta": cert.delta,
        "phi_total": cert.phi_total,
        "min_ratio": rep.min_ratio,
        "max_violation": rep.max_violation,
        "pass": rep.passed,
    }, indent=2))
    return 0 if rep.passed else 1


def cmd_oracle(args):
    g = parse_kernel_spec(args.kernel)
    gbar = normalize(g)
    cert = g.certificate()
    if cert is None:
        raise SystemExit(f"{g.describe()} has no (K1) certificate")
    chain = discretize(gbar, args.n * args.oracle_multiplier)
    rows = oracle_report(gbar, cert, args.n, args.N, chain)
    write_oracle_csv(rows, args.out or "-")


def build_parser():
    p = argparse.ArgumentParser(prog="rdsgraphon", description="RDS graphon simulation and verification")
    p.add_argument("--backend", action="store_true", help="print the kernel backend (numba or numpy) and exit")
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("sample", help="sample a stationary chain trajectory")
    s.add_argument("--kernel", required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--method", default="exact", help="exact | rejection | grid[:m]")
    s.add_argument("--out", help="trajectory CSV (m,x)")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("build-graph", help="clump a trajectory into the RDS graph")
    s.add_argument("--trajectory", help="trajectory CSV; otherwise sample from --kernel")
    s.add_argument("--kernel", default="kind=constant c=1.0")
    s.add_argument("--N", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--method", default="exact")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--scaled", action="store_true", help="scale weights by n^2/N")
    s.add_argument("--out", help="edge list CSV (i,j,weight)")
    s.add_argument("--step-out", help="step-graphon matrix CSV")
    s.set_defaults(func=cmd_build_graph)

    s = sub.add_parser("cutnorm", help="cut distance between two step-graphon CSV files")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--method", default="auto", choices=["auto", "exact", "heuristic"])
    s.add_argument("--exact-limit", type=int, default=EXACT_LIMIT)
    s.add_argument("--restarts", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_cutnorm)

    s = sub.add_parser("theorem1", help="sparse-regime convergence run")
    _add_config_args(s)
    s.set_defaults(func=cmd_theorem1)

    s = sub.add_parser("dense", help="dense-regime (alpha = 1) run against the Poissonized kernel")
    _add_config_args(s)
    s.set_defaults(func=cmd_dense)

    s = sub.add_parser("lemma", help="intermediate comparisons L1, L2 or L3")
    s.add_argument("--which", required=True, choices=["L1", "L2", "L3"])
    _add_config_args(s)
    s.set_defaults(func=cmd_lemma)

    s = sub.add_parser("verify-k1", help="check the analytic (K1) certificate on a grid")
    s.add_argument("--kernel", required=True)
    s.add_argument("--grid", type=int, default=64)
    s.set_defaults(func=cmd_verify_k1)

    s = sub.add_parser("oracle", help="per-pair oracle report CSV")
    s.add_argument("--kernel", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--oracle-multiplier", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.backend:
        print(_accel.backend())
        return 0
    if not getattr(args, "func", None):
        parser.print_help()
        return 2
    try:
        rc = args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
