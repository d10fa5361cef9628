"""Command-line entry point: ``qctrlsim --experiment NAME --config FILE --out DIR [--seed N]``.

Exit status: 0 all checks passed, 1 a check failed, 2 unknown experiment or
bad usage, 3 unreadable or invalid config, 4 infeasible frequency plan,
5 pulse-program diagnostics, 6 output directory not writable.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .errors import DomainError, InfeasiblePlanError
from .experiments import EXPERIMENTS, ProgramDiagnosticsError, export_report, run_experiment

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_INFEASIBLE = 4
EXIT_PROGRAM = 5
EXIT_OUTPUT = 6


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qctrlsim", description="Run a named simulation experiment.")
    p.add_argument("--experiment", required=True, help="one of: " + ", ".join(EXPERIMENTS))
    p.add_argument("--config", required=True, help="scenario TOML file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.experiment not in EXPERIMENTS:
        print(f"unknown experiment {args.experiment!r}; choose from {', '.join(EXPERIMENTS)}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
        result = run_experiment(args.experiment, cfg, args.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasiblePlanError as e:
        print(f"infeasible plan: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ProgramDiagnosticsError as e:
        for d in e.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_PROGRAM
    except (DomainError, KeyError, TypeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        export_report(result, args.out)
    except OSError as e:
        print(f"cannot write report: {e}", file=sys.stderr)
        return EXIT_OUTPUT
    for c in result.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} = {c.value:.6g} ({c.comparison} {c.tolerance:g})")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
