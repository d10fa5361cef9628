"""Relative error of the 16x envelope interpolator against envelope bandwidth.

Prints one line per bandwidth; the error is measured away from the edges,
where the end-value padding does not reach.

    python3 scripts/interpolation_bandwidth.py --trials 50
"""

import argparse

import numpy as np

from qctrlsim.dsp import Envelope, interpolate_envelope

EDGE = 16  # envelope samples dropped at each end


def worst_error(bandwidth, trials, rng, n=256):
    k = np.arange(n * 16)
    worst = 0.0
    for _ in range(trials):
        f, ph = rng.uniform(0, bandwidth), rng.uniform(0, 2 * np.pi)
        ref = 0.9 * np.cos(2 * np.pi * f * k + ph)
        y = interpolate_envelope(Envelope(ref[::16], 16)).samples.real
        sl = slice(EDGE * 16, -EDGE * 16)
        worst = max(worst, np.linalg.norm(y[sl] - ref[sl]) / np.linalg.norm(ref[sl]))
    return worst


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print("bandwidth (cycles/DAC sample)  worst relative L2 error")
    for div in (32, 40, 48, 64, 128):
        print(f"f_s/{div:<4d} {1 / div:.5f}              {worst_error(1 / div, args.trials, rng):.3e}")


if __name__ == "__main__":
    main()
