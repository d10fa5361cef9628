"""Detuning from Ramsey quadratures: ``exp(i phi) = (X + iY)/|X + iY|``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

TWO_PI = 2.0 * np.pi
AMPLITUDE_FLOOR = 1e-6


@dataclass(frozen=True)
class DetuningTrace:
    t: np.ndarray  # s
    delta: np.ndarray  # Hz, NaN where invalid
    valid: np.ndarray  # bool mask
    phase: np.ndarray  # unwrapped phase, rad

    def __len__(self):
        return len(self.t)


def signals_from_populations(p_x, p_y):
    """Ramsey quadratures ``2P - 1`` from the excited populations of the two final axes."""
    return 2.0 * np.asarray(p_x, float) - 1.0, 2.0 * np.asarray(p_y, float) - 1.0


def _segments(mask):
    """Start/stop index pairs of the runs of True in ``mask``."""
    edges = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
    return zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1))


def extract_detuning(x_trace, y_trace, dt: float, floor: float = AMPLITUDE_FLOOR) -> DetuningTrace:
    """Unwrap the Ramsey phase and differentiate it.

    Central differences inside, one-sided at the ends of every valid run.
    Points with ``X^2 + Y^2`` below ``floor`` are masked and break the unwrap.
    """
    x = np.asarray(x_trace, dtype=float)
    y = np.asarray(y_trace, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("X and Y traces must be 1-D and the same length")
    if len(x) < 3:
        raise DomainError("need at least 3 points")
    if not dt > 0:
        raise DomainError("dt must be positive")
    ok = (x * x + y * y) >= floor
    phase = np.full(len(x), np.nan)
    delta = np.full(len(x), np.nan)
    valid = np.zeros(len(x), dtype=bool)
    for lo, hi in _segments(ok):
        seg = np.unwrap(np.arctan2(y[lo:hi], x[lo:hi]))
        phase[lo:hi] = seg
        if hi - lo >= 2:
            delta[lo:hi] = np.gradient(seg, dt) / TWO_PI
            valid[lo:hi] = True
    return DetuningTrace(np.arange(len(x)) * dt, delta, valid, phase)
