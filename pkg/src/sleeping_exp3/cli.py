"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 failed check.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .core import ConfigError
from .runner import check_sublinear, compare_estimators, load_spec, oracle_check, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sleeping-exp3", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run seed-replicated episodes and write traces + summary")
    run.add_argument("--config", required=True)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--output", help="override output_dir from the config")
    run.add_argument("--check-sublinear", action="store_true", help="exit 2 unless regret looks sublinear")

    cmp_ = sub.add_parser("compare-estimators", help="exact vs Monte Carlo joint probability")
    cmp_.add_argument("--config", required=True)
    cmp_.add_argument("--output")

    orc = sub.add_parser("oracle-check", help="brute-force checks of the hindsight comparator")
    orc.add_argument("--config", required=True)
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        spec = load_spec(args.config)
        if getattr(args, "output", None):
            spec = replace(spec, output_dir=args.output)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "run":
        report = run_experiment(spec, workers=args.workers)
        final = report.final
        print(f"T={final.t} mean regret {final.mean_regret:.3f} +/- {final.std_error:.3f} -> {spec.output_dir}")
        if args.check_sublinear:
            env = spec.environment
            ok = True
            for name, passed, detail in check_sublinear(report, env.n_arms, env.k, env.horizon):
                print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
                ok &= passed
            return EXIT_OK if ok else EXIT_CHECK
        return EXIT_OK

    if args.command == "compare-estimators":
        rows = compare_estimators(spec)
        worst = max(r["max_gap"] for r in rows)
        print(f"{len(rows)} rounds, largest gap {worst:.6f} -> {spec.output_dir}")
        return EXIT_OK

    failures = oracle_check(spec)
    for msg in failures:
        print(f"FAIL {msg}")
    if failures:
        return EXIT_CHECK
    print(f"oracle-check passed for {len(spec.seeds)} seed(s)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
