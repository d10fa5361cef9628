"""Flux-line calibration over random transfer functions.

For each line: Ramsey detuning extraction, exponential fit, inversion, and a
closed-loop Ramsey measurement of the pre-distorted step.  Prints the settle
and approach errors per line and the number of lines that meet both.

    python3 scripts/predistort_lines.py --lines 20 --seed 1 --method ramsey
"""

import argparse
import time
import warnings

import numpy as np

from qctrlsim.calibration import (CollapseWarning, FluxCalibrationConfig, calibrate_flux_line,
                                  random_transfer_function)
from qctrlsim.device import FluxQubit


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lines", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--method", choices=("ramsey", "split"), default="ramsey")
    args = ap.parse_args()
    cfg = FluxCalibrationConfig()
    q = FluxQubit(5e9, 2e9)
    rng = np.random.default_rng(args.seed)
    ok, t0 = 0, time.perf_counter()
    for k in range(args.lines):
        line = random_transfer_function(rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CollapseWarning)
            cal = calibrate_flux_line(q, line, cfg, args.method)
        settle, approach = cal.settle_error(cfg.settle_time), cal.settle_error(cfg.approach_time)
        good = settle <= cfg.settle_tol and approach <= cfg.approach_tol
        ok += good
        print(f"line {k:3d} terms {len(line.terms)}  settle {settle:.2e}  approach {approach:.2e}"
              f"  {'ok' if good else 'FAIL'}")
    print(f"{ok}/{args.lines} lines pass in {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
