"""Command line entry point (``v2vsim``)."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import csvio, experiments, stats
from .scenario import ScenarioError, builtin_scenario, resolve_scenario
from .sim import SimulationError, run

LOG = logging.getLogger("v2vsim")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("need at least one value")
    return values


def _add_cacc_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kp", type=float, help="spacing error gain (1/s^2)")
    p.add_argument("--kd", type=float, help="relative speed gain (1/s)")
    p.add_argument("--headway", type=float, help="time headway h (s)")
    p.add_argument("--standstill", type=float, help="standstill gap d (m)")


def _apply_overrides(s, args, delay=None):
    overrides = {field: getattr(args, flag) for flag, field in
                 (("kp", "k_p"), ("kd", "k_d"), ("headway", "headway_h"),
                  ("standstill", "standstill_d")) if getattr(args, flag, None) is not None}
    if overrides:
        s = s.with_cacc(**overrides)
    if delay is not None:
        s = s.with_delay(delay)
    if getattr(args, "seed", None) is not None:
        s = replace(s, rng_seed=args.seed)
    return s


def cmd_run(args) -> int:
    s = _apply_overrides(resolve_scenario(args.scenario), args, args.delay)
    log = run(s)
    csvio.export_csv(log, args.out, trace=args.trace)
    print(f"{s.name}: {len(log.rows)} rows, {len(log.events)} warning events -> {args.out}")
    return 0


def cmd_sweep(args) -> int:
    base = _apply_overrides(resolve_scenario(args.scenario), args)
    rows = experiments.sweep_delay(base, args.delays, workers=args.workers)
    print(f"{'delay':>7} {'mean':>9} {'std':>8} {'var':>8} {'max|L-F|':>9}")
    for r in rows:
        print(f"{r.delay:7.3f} {r.stats.mean:9.4f} {r.stats.std:8.4f} "
              f"{r.stats.variance:8.4f} {r.max_abs:9.3f}")
    if args.out:
        csvio.write_sweep(rows, args.out)
    return 0


def cmd_platoon(args) -> int:
    base = _apply_overrides(builtin_scenario("platoon4"), args)
    result = experiments.platoon(args.delay, base)
    for (a, b), r in result.gap_correlations.items():
        print(f"gap correlation {a}-{b}: {r:.4f}")
    print(f"pooled spacing error std: {result.spacing_error_pooled_std:.4f} m")
    print(f"minimum bumper gap: {result.min_gap:.3f} m")
    if args.out:
        csvio.export_csv(result.log, args.out)
    return 0


def cmd_das(args) -> int:
    s = resolve_scenario(args.scenario)
    if s.controller.das is None:
        raise ScenarioError(f"{s.name}: no collision warning configured (set controller.ego)")
    log = run(s)
    print(f"{s.name}: {len(log.events)} warning events")
    if log.events:
        first = log.events[0]
        print(f"first warning t={first.time:.2f}s follower={first.follower_id} "
              f"leader={first.leader_id} d_a={first.d_a:.2f} d_sf={first.d_sf:.2f}")
    if args.out:
        csvio.export_csv(log, args.out)
    return 0


def _column(args) -> list[float]:
    values = csvio.read_column(args.input, args.column, args.vehicle)
    if not values:
        raise ValueError(f"column {args.column!r} has no values")
    return values


def cmd_stats(args) -> int:
    values = _column(args)
    st = stats.summarize(values)
    for name in ("n", "mean", "median", "std", "variance", "min", "max"):
        print(f"{name:>9}: {getattr(st, name)}")
    if args.bootstrap:
        ci = stats.bootstrap_ci(values, level=args.level, resamples=args.resamples,
                                seed=args.seed)
        print(f"bootstrap {ci.level:.0%} CI of mean: [{ci.lo}, {ci.hi}]")
    return 0


def cmd_histogram(args) -> int:
    for lo, hi, count in stats.histogram(_column(args), args.bins):
        print(f"{lo}\t{hi}\t{count}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="v2vsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario and write its CSV log")
    p.add_argument("--scenario", required=True, help="TOML file or built-in fixture name")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--delay", type=float, help="override the network delay (s)")
    p.add_argument("--trace", action="store_true", help="also write <out>.trace.csv")
    _add_cacc_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-delay", help="leader/follower speed statistics per delay")
    p.add_argument("--scenario", default="delay_sweep")
    p.add_argument("--delays", type=_float_list, default=list(experiments.DEFAULT_DELAYS))
    p.add_argument("--out")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int)
    _add_cacc_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("platoon", help="four-vehicle platoon run")
    p.add_argument("--delay", type=float, required=True)
    p.add_argument("--out")
    _add_cacc_flags(p)
    p.set_defaults(func=cmd_platoon)

    p = sub.add_parser("das", help="collision-warning scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_das)

    p = sub.add_parser("stats", help="summary statistics of one CSV column")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--column", required=True)
    p.add_argument("--vehicle", type=int, help="only rows of this vehicle id")
    p.add_argument("--bootstrap", action="store_true")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--resamples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("histogram", help="equal-width histogram of one CSV column")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--column", required=True)
    p.add_argument("--bins", type=int, required=True)
    p.add_argument("--vehicle", type=int)
    p.set_defaults(func=cmd_histogram)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, SimulationError, ValueError, KeyError, OSError, RuntimeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
