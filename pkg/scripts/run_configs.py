"""Run every shipped scenario through the CLI and tabulate exit codes.

    python3 scripts/run_configs.py --out /tmp/qctrlsim-runs
"""

import argparse
import time
from pathlib import Path

from qctrlsim.cli import main as cli

ROOT = Path(__file__).resolve().parents[1]
RUNS = [
    ("mux-loopback", "mux_loopback.toml"),
    ("plan-mux", "plan_mux.toml"),
    ("plan-mux", "plan_mux_infeasible.toml"),
    ("predistort", "predistort.toml"),
    ("predistort", "predistort_random.toml"),
    ("phase-stability", "phase_stability.toml"),
    ("crosstalk", "crosstalk.toml"),
    ("gate-phase", "gate_phase.toml"),
    ("check-program", "check_iswap.toml"),
    ("check-program", "check_param_measure.toml"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-slow", action="store_true", help="skip the 100-line predistort run")
    args = ap.parse_args()
    rows = []
    for exp, cfg in RUNS:
        if args.skip_slow and cfg == "predistort_random.toml":
            continue
        t0 = time.perf_counter()
        code = cli(["--experiment", exp, "--config", str(ROOT / "configs" / cfg),
                    "--out", str(Path(args.out) / Path(cfg).stem), "--seed", str(args.seed)])
        rows.append((exp, cfg, code, time.perf_counter() - t0))
    print()
    for exp, cfg, code, dt in rows:
        print(f"{exp:16s} {cfg:28s} exit {code}  {dt:6.1f} s")


if __name__ == "__main__":
    main()
