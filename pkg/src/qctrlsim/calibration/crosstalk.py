"""Crosstalk compensation by coordinate descent on the Rabi contrast."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from ..device.crosstalk import Compensation, CrosstalkScenario, chevron_center, chevron_map, contrast

FLAT_TOL = 1e-9


@dataclass(frozen=True)
class CompensationResult:
    compensation: Compensation
    contrast: float
    center: float  # chevron centre after compensation, Hz
    evaluations: int
    notes: tuple = field(default=(), compare=False)


def default_lengths(s: CrosstalkScenario, periods: float = 4.0, n: int = 201) -> np.ndarray:
    return np.linspace(0.0, periods / s.rabi, n)


def chevron_freqs(s: CrosstalkScenario, span: float = 20e6, step: float = 0.05e6) -> np.ndarray:
    n = int(round(span / step))
    return s.bare_sum + (np.arange(n + 1) - n / 2) * step


def _keys(line):
    return ("amp_a", "phase_a") if line == "a" else ("amp_b", "phase_b")


def calibrate_compensation(s: CrosstalkScenario, lengths=None, probe: float | None = None,
                           sweeps: int = 3, phase_step_deg: float = 1.0) -> CompensationResult:
    """Tune the cancellation pulses on lines a and b to maximise contrast at ``f_a + f_b``.

    Each sweep visits line a then line b: a coarse phase grid at the current
    (or probe) amplitude, a bounded refinement, then a bounded amplitude
    search.  A phase sweep that does not move the contrast leaves the line at
    zero amplitude.
    """
    lengths = default_lengths(s) if lengths is None else np.asarray(lengths, float)
    probe = 0.1 * s.drive_amp if probe is None else probe
    f0 = s.bare_sum
    n_eval = 0

    def score(comp):
        nonlocal n_eval
        n_eval += 1
        return contrast(s, comp, f0, lengths)

    comp = Compensation()
    flat = {"a": False, "b": False}
    grid = np.deg2rad(np.arange(0.0, 360.0, phase_step_deg))
    step = grid[1] - grid[0]
    for _ in range(sweeps):
        for line in ("a", "b"):
            k_amp, k_phase = _keys(line)
            amp = getattr(comp, k_amp) or probe
            vals = np.array([score(replace(comp, **{k_amp: amp, k_phase: p})) for p in grid])
            if np.ptp(vals) < FLAT_TOL:
                flat[line] = True
                phase = 0.0
            else:
                flat[line] = False
                p0 = grid[int(np.argmax(vals))]
                res = minimize_scalar(lambda p: -score(replace(comp, **{k_amp: amp, k_phase: p})),
                                      bounds=(p0 - step, p0 + step), method="bounded",
                                      options={"xatol": 1e-7})
                phase = float(np.mod(res.x, 2 * np.pi))
            hi = 2.0 * max(amp, np.max(np.abs(s.matrix[:2, 2])) * s.drive_amp)
            res = minimize_scalar(lambda a: -score(replace(comp, **{k_amp: a, k_phase: phase})),
                                  bounds=(0.0, hi), method="bounded", options={"xatol": 1e-9})
            amp = float(res.x)
            zero = score(replace(comp, **{k_amp: 0.0, k_phase: 0.0}))
            if flat[line] or zero >= -res.fun:
                comp = replace(comp, **{k_amp: 0.0, k_phase: 0.0})
            else:
                comp = replace(comp, **{k_amp: amp, k_phase: phase})
    notes = [f"line {k}: contrast flat in phase, no compensation" for k, v in flat.items() if v]
    freqs = chevron_freqs(s)
    center = chevron_center(freqs, chevron_map(s, comp, freqs, lengths))
    return CompensationResult(comp, score(comp), center, n_eval, tuple(notes))
