"""Command line entry point: ``mmtsp solve``, ``mmtsp compare`` and ``mmtsp snapshots``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bench import (
    ALGORITHMS,
    ConfigError,
    ExperimentConfig,
    load_config,
    load_results,
    run_experiment,
    t_test,
)
from .som import SomConfig, export_snapshots
from .tsplib import load_instance


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmtsp", description="MinMax multiple-TSP solvers")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run a seeded multi-run experiment")
    solve.add_argument("--config", help="JSON experiment file; flags below override it")
    solve.add_argument("--instance", help="bundled instance name or .tsp path")
    solve.add_argument("--m", type=int, help="number of salesmen")
    solve.add_argument("--algo", dest="algorithm", help=f"one of {', '.join(ALGORITHMS)}")
    solve.add_argument("--runs", type=int)
    solve.add_argument("--seed", type=int, help="seed of run 0; run i uses seed + i")
    solve.add_argument("--budget", type=int, help="fitness evaluations per run")
    solve.add_argument("--out", help="output directory")
    solve.add_argument("--trace-every", type=int, dest="trace_every")
    solve.add_argument("--workers", type=int,
                       help="parallel runs (default: $MMTSP_WORKERS, then the config)")

    compare = sub.add_parser("compare", help="Welch t-test between two results.json files")
    compare.add_argument("--a", required=True)
    compare.add_argument("--b", required=True)
    compare.add_argument("--alpha", type=float, default=0.10)

    snap = sub.add_parser("snapshots", help="dump SOM neuron positions during training")
    snap.add_argument("--instance", required=True)
    snap.add_argument("--m", type=int, required=True)
    snap.add_argument("--seed", type=int, default=0)
    snap.add_argument("--every", type=int, default=500)
    snap.add_argument("--rotation", type=int, default=0)
    snap.add_argument("--out", required=True, help="CSV file")
    return parser


def _solve(args) -> int:
    overrides = {k: getattr(args, k) for k in
                 ("instance", "m", "algorithm", "runs", "seed", "budget", "out", "trace_every")}
    if args.config:
        cfg = load_config(args.config, **overrides)
    else:
        missing = [f"--{k}" for k in ("instance", "m", "algorithm") if overrides[k] is None]
        if missing:
            raise ConfigError(f"missing {', '.join(missing)} (or pass --config)")
        cfg = ExperimentConfig.from_dict({k: v for k, v in overrides.items() if v is not None})
    stats = run_experiment(cfg, workers=args.workers)
    s = stats.summary()
    print(f"{s['instance']} m={s['m']} {s['algorithm']} runs={s['runs']}: "
          f"min {s['min']:.2f} max {s['max']:.2f} avg {s['avg']:.2f} stdev {s['stdev']:.2f}")
    if cfg.out:
        print(f"report written to {cfg.out}")
    return 0


def _compare(args) -> int:
    a_all, b_all = load_results(args.a), load_results(args.b)
    b_index = {(s.instance, s.m): s for s in b_all}
    pairs = [(a, b_index[(a.instance, a.m)]) for a in a_all if (a.instance, a.m) in b_index]
    if not pairs and len(a_all) == 1 and len(b_all) == 1:
        pairs = [(a_all[0], b_all[0])]
    if not pairs:
        raise ConfigError("no (instance, m) experiments in common")
    for a, b in pairs:
        res = t_test(a.costs, b.costs, args.alpha)
        verdict = "significant" if res.significant else "not significant"
        t_text = f"{res.t:.4f}" if res.defined else f"{res.t} (undefined)"
        print(f"{a.instance} m={a.m}: {a.algorithm} avg {a.avg:.2f} vs {b.algorithm} "
              f"avg {b.avg:.2f}; t = {t_text}, p = {res.p:.4g}, {verdict} at {args.alpha}")
    return 0


def _snapshots(args) -> int:
    inst = load_instance(args.instance)
    sol = export_snapshots(inst, args.m, SomConfig(), np.random.default_rng(args.seed),
                           args.out, every=args.every, rotation=args.rotation)
    print(f"wrote {args.out}; final solution tours: {sol.to_dict(inst)['tours']}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"solve": _solve, "compare": _compare, "snapshots": _snapshots}[args.command]
    try:
        return handler(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
