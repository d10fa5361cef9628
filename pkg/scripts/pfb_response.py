"""Channel responses of the polyphase filter bank and its summed-power ripple.

Writes ``pfb_response.csv`` (frequency in units of f_s, one column per
exposed channel, plus the best exposed gain) and prints the ripple bound and
the frequency range the exposed channels cover at -3 dB.

    python3 scripts/pfb_response.py --out /tmp
"""

import argparse
from pathlib import Path

import numpy as np

from qctrlsim.io import write_csv
from qctrlsim.readout import PfbConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=".")
    ap.add_argument("--points", type=int, default=801)
    args = ap.parse_args()
    cfg = PfbConfig()
    f = np.linspace(0.0, 0.5, args.points)
    gains = np.array([[abs(cfg.response(x - c / cfg.n_branches, 1.0)) for c in range(cfg.n_channels)]
                      for x in f])
    best = gains.max(axis=1)
    header = ("f",) + tuple(f"ch{c}" for c in range(cfg.n_channels)) + ("best",)
    path = write_csv(Path(args.out) / "pfb_response.csv", header,
                     [(x, *g, b) for x, g, b in zip(f, gains, best)])
    covered = f[best >= np.sqrt(0.5) - cfg.ripple_bound()]
    print(f"ripple bound          {cfg.ripple_bound():.6f}")
    print(f"-3 dB coverage        0 .. {covered.max():.5f} f_s")
    print(f"gain at Nyquist       {best[-1]:.3e}")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
