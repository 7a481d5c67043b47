"""Command line entry point: ``etvlab run|etv|fit|trend``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .etv_stats import PooledDistribution
from .experiment import ConfigError, ExperimentConfig, load_config, run_experiment
from .ga import read_records
from .genealogy import build_graph, compute_etv_snapshot
from .qexp import FitError, fit
from .trend import MetricSeries, fit_trend, format_table


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def cmd_run(args) -> int:
    overrides = {"seed": args.seed, "workers": args.workers, "out": args.out}
    cfg = load_config(args.config, **overrides) if args.config else ExperimentConfig(
        **{k: v for k, v in overrides.items() if v is not None})
    manifest = run_experiment(cfg, workers=args.workers, out=args.out)
    res = manifest.results
    print(format_table(res.trends), end="")
    for t, cf in res.fits.items():
        if cf.fit is None:
            print(f"t={t:>4}  max_etv={cf.max_etv_mean:7.2f}  fit failed: {cf.error}")
        else:
            print(f"t={t:>4}  max_etv={cf.max_etv_mean:7.2f}  q={cf.fit.q:.3f}  x0={cf.fit.x0:.4f}  "
                  f"gamma={cf.fit.gamma:.4f}  R2={cf.fit.score:.4f}")
    if res.anomaly is not None:
        a = res.anomaly
        print(f"fitness balance in {a.balanced_runs}/{len(a.balance_generations)} runs; "
              f"tail ratio {a.tail_ratio:.3g} ({'FLAGGED' if a.tail_flagged else 'not flagged'})")
    print(f"manifest: {Path(cfg.out if args.out is None else args.out) / 'manifest.json'}")
    return 0


def cmd_etv(args) -> int:
    graph = build_graph(read_records(args.records))
    horizon = args.horizon or graph.generations
    table = compute_etv_snapshot(graph, horizon, edge_cap=args.edge_cap, detach=not args.no_detach)
    if args.out:
        table.write(args.out)
    else:
        sys.stdout.write(f"# horizon {table.horizon} pop_size {table.pop_size}\n")
        for (i, j), v in table.items():
            sys.stdout.write(f"{i},{j} {v}\n")
    return 0


def cmd_fit(args) -> int:
    dist = PooledDistribution.read(args.distribution)
    result = fit(dist)
    record = {"t": dist.horizon, "q": result.q, "x0": result.x0, "p0": result.p0,
              "gamma": result.gamma, "score": result.score, "n_points": result.n_points}
    text = json.dumps(record) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def cmd_trend(args) -> int:
    rows = [json.loads(line) for line in Path(args.fits).read_text().splitlines() if line.strip()]
    fits = {}
    for metric, key in (("ETV", "max_etv_mean"), ("x0", "x0"), ("q", "q"), ("gamma", "gamma")):
        pts = [(r["t"], r[key]) for r in rows if r.get(key) is not None]
        if len(pts) >= 4:
            ts, vs = zip(*pts)
            fits[metric] = fit_trend(MetricSeries(metric, ts, vs))
    text = format_table(fits)
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etvlab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a key = value config file")
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--seed", type=_u64, metavar="U64", help="master seed (overrides config)")
    p.add_argument("--workers", type=int, metavar="K")
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("etv", help="ETV table from a birth-record stream file")
    p.add_argument("records")
    p.add_argument("--horizon", type=int)
    p.add_argument("--edge-cap", type=int)
    p.add_argument("--no-detach", action="store_true", help="keep hitchhiking ancestors")
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_etv)

    p = sub.add_parser("fit", help="q-exponential fit of a distribution file")
    p.add_argument("distribution")
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("trend", help="power-trend summary from a fit series (fits.jsonl)")
    p.add_argument("fits")
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_trend)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FitError, ValueError, OSError) as exc:
        print(f"etvlab {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
