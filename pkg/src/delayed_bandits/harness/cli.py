"""Command line entry point: ``delayed-bandits run|bounds|diagnose``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from ..bounds import lower_bound_censored, lower_bound_uncensored, upper_bound_constants
from . import diagnostics
from .config import ExperimentConfig
from .runner import run_experiment


def _cmd_run(args) -> int:
    config = ExperimentConfig.load(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    out = Path(args.out if args.out is not None else config.output_dir)
    start = time.perf_counter()
    result = run_experiment(config, out, threads=args.threads)
    elapsed = time.perf_counter() - start
    for pc in config.policies:
        row = result.final(pc.name)
        print(f"{pc.name:>16}  T={row.checkpoint_t}  regret={row.mean:.3f} +/- {row.se:.3f} (se, R={row.runs})")
    print(f"wrote {out / 'raw.csv'} and {out / 'aggregate.csv'} in {elapsed:.1f}s")
    if args.plot:
        from .plot import plot_aggregate

        print(f"wrote {plot_aggregate(out / 'aggregate.csv', out / 'regret.svg')}")
    return 0


def _cmd_bounds(args) -> int:
    config = ExperimentConfig.load(args.config)
    instance = config.instance
    theta = instance.theta
    report = {"theta": list(theta), "uncensored": lower_bound_uncensored(theta).to_dict()}
    if instance.censor_window is not None:
        tau_m = instance.delays.cdf(instance.censor_window)
        report["censored"] = lower_bound_censored(theta, tau_m).to_dict()
    else:
        tau_m = 1.0
    report["upper"] = upper_bound_constants(theta, tau_m, args.epsilon, args.eta).to_dict()
    json.dump(report, sys.stdout, indent=2)
    print()
    return 0


def _cmd_diagnose(args) -> int:
    suite = diagnostics.SUITES[args.suite]
    kwargs = {"seed": args.seed} if args.suite in ("concentration", "bounds", "oracle") else {}
    if args.replications is not None:
        if args.suite != "concentration":
            raise ValueError("--replications only applies to the concentration suite")
        kwargs["replications"] = args.replications
    report = suite(**kwargs)
    json.dump(report, sys.stdout, indent=2)
    print()
    print("PASS" if report["passed"] else "FAIL", args.suite)
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delayed-bandits", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run seeded replications and write raw/aggregate CSVs")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--out", default=None, help="output directory (default: config output_dir)")
    run.add_argument("--threads", type=int, default=1, help="worker processes")
    run.add_argument("--plot", action="store_true", help="also render regret.svg (needs matplotlib)")
    run.set_defaults(func=_cmd_run)

    bounds = sub.add_parser("bounds", help="print lower and upper regret constants as JSON")
    bounds.add_argument("--config", required=True)
    bounds.add_argument("--epsilon", type=float, default=0.1)
    bounds.add_argument("--eta", type=float, default=0.1)
    bounds.set_defaults(func=_cmd_bounds)

    diag = sub.add_parser("diagnose", help="run a numerical self-check")
    diag.add_argument("suite", choices=sorted(diagnostics.SUITES))
    diag.add_argument("--seed", type=int, default=0)
    diag.add_argument("--replications", type=int, default=None)
    diag.set_defaults(func=_cmd_diagnose)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
