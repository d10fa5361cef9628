"""Mean-frequency spectroscopy model against the time-resolved probe, by delay.

The fast model fits a Lorentzian to populations computed from the mean qubit
frequency inside the probe window; the reference integrates the Bloch
equations through the same window.  Their centres agree once the window lies
wholly after the flux step.

    python3 scripts/spectroscopy_window.py
"""

import argparse

import numpy as np

from qctrlsim.calibration import fit_lorentzian
from qctrlsim.device import FluxQubit, TransferFunction, apply_channel
from qctrlsim.device.flux import probe_linewidth, spectroscopy_integrated, spectroscopy_population

F_S = 6.88128e9


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigma", type=float, default=7e-9, help="probe sigma, s")
    args = ap.parse_args()
    q = FluxQubit(5e9, 2e9)
    line = TransferFunction(((-0.1, 30e-9), (0.05, 300e-9)))
    x = apply_channel(np.full(6000, q.amplitude_for(-100e6)), line, F_S)
    gamma = probe_linewidth(args.sigma)
    freqs = q.f_sweet - 100e6 + np.linspace(-3, 3, 41) * gamma
    print("delay (samples)  centre difference / linewidth")
    for delay in (60, 120, 200, 400, 1500):
        fast = fit_lorentzian(freqs, spectroscopy_population(q, x, delay, freqs, F_S, args.sigma)).center
        ref = fit_lorentzian(freqs, [spectroscopy_integrated(q, x, delay, f, F_S, args.sigma)
                                     for f in freqs]).center
        print(f"{delay:15d}  {(fast - ref) / gamma:+.4f}")


if __name__ == "__main__":
    main()
