"""Long-run phase stability of a coherence constraint.

Each repetition sweeps a programmed phase ``delta`` on the last term of the
constraint and fits the signal ``(1 + cos(k Phi + delta)) / 2`` for its
optimum, where ``Phi`` is the combination phase and ``k`` is 1 (whole
coefficients) or 2 (half coefficients).  The optimum track is the measured
phase; it moves only if ``Phi`` does.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import periodogram

from .device.parametric import AnalogLoModel, fit_axis_sweep
from .pulselang import PulseProgram, Quantity, constraint_phases, with_repetitions
from .pulselang.coherence import _resolve

TWO_PI = 2.0 * np.pi


@dataclass
class StabilityResult:
    t: np.ndarray  # s, repetition start times
    phase: np.ndarray  # rad, optimum sweep phase relative to the first repetition
    model: str
    spread: float  # max |phase|
    period: float | None  # s, strongest oscillation, None when flat
    amplitude: float  # rad, of that oscillation

    def rows(self):
        return list(zip(range(len(self.t)), self.t.tolist(), self.phase.tolist()))


def _drift_phase(p: PulseProgram, c, drift: AnalogLoModel, t):
    total = np.zeros_like(t)
    for coef, ref in c.terms:
        if p.channel(ref.name).lo is not None and ref.name in drift.lo:
            total += float(coef) * drift.drift(ref.name, t)
    return total


def dominant_period(t, x, min_period: float, max_period: float):
    """Period (s) and amplitude of the strongest periodogram line in a band."""
    dt = t[1] - t[0]
    x = np.asarray(x, float)
    x = x - np.polyval(np.polyfit(t, x, 1), t)
    f, pxx = periodogram(x, fs=1.0 / dt, detrend=False, scaling="spectrum")
    band = (f >= 1.0 / max_period) & (f <= 1.0 / min_period)
    if not np.any(band) or np.max(pxx[band]) == 0:
        return None, 0.0
    i = np.flatnonzero(band)[np.argmax(pxx[band])]
    return float(1.0 / f[i]), float(np.sqrt(2.0 * pxx[i]))


def phase_stability(p: PulseProgram, constraint, phase_model: str = "dds", n_reps: int = 10_000,
                    spacing: float = 3.6, drift: AnalogLoModel | None = None,
                    n_sweep: int = 16, flat_tol: float = 1e-10) -> StabilityResult:
    """Run the constraint's phase measurement once per repetition.

    Parameters
    ----------
    spacing : float
        Seconds between repetitions; replaces the program's declared period.
    drift : AnalogLoModel, optional
        Slow wander added to every LO-carrying term (``analog_lo`` only).
    """
    c = _resolve(p, constraint)
    period = Quantity(float(spacing), "s")
    prog = with_repetitions(p, n_reps, period)
    phi = constraint_phases(prog, c, phase_model, n_reps)
    t = np.arange(n_reps) * spacing
    if drift is not None and phase_model == "analog_lo":
        phi = phi + _drift_phase(p, c, drift, t)
    k = 2 if c.modulus == Fraction(1, 2) else 1
    delta = np.linspace(0.0, TWO_PI, n_sweep, endpoint=False)
    signal = 0.5 * (1.0 + np.cos(k * phi[:, None] + delta[None, :]))
    best = fit_axis_sweep(delta, signal)
    best = np.atleast_1d(best)
    measured = np.unwrap(best)
    measured = measured - measured[0]
    spread = float(np.max(np.abs(measured)))
    per, amp = (None, 0.0)
    if spread > flat_tol and n_reps >= 8:
        per, amp = dominant_period(t, measured, 4 * spacing, t[-1] / 4)
    return StabilityResult(t, measured, phase_model, spread, per, amp)
