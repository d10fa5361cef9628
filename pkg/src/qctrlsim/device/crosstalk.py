"""Flux crosstalk from a coupler drive and the resulting Stark-shifted chevron.

Lines are ordered ``(a, b, coupler)``.  The flux seen by loop ``k`` is
``sum_j M[k, j] d_j`` with ``d`` the complex drive amplitudes on the lines.
The residual drive on the two qubit loops Stark-shifts the two-photon
``|00> <-> |11>`` resonance down by ``stark_coeff * (|r_a|^2 + |r_b|^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError

MAX_CROSSTALK = 0.25


@dataclass(frozen=True)
class Compensation:
    """Amplitude and phase (rad) of the cancellation pulse on lines a and b."""

    amp_a: float = 0.0
    phase_a: float = 0.0
    amp_b: float = 0.0
    phase_b: float = 0.0

    def drives(self) -> np.ndarray:
        return np.array([self.amp_a * np.exp(1j * self.phase_a),
                         self.amp_b * np.exp(1j * self.phase_b)])


@dataclass(frozen=True)
class CrosstalkScenario:
    matrix: np.ndarray = field(default_factory=lambda: np.eye(3))
    stark_coeff: float = 0.0  # Hz per unit drive amplitude squared
    f_a: float = 48.4e6
    f_b: float = 61.8e6
    drive_amp: float = 1.0
    drive_phase: float = 0.0
    rabi: float = 2e6  # two-photon Rabi rate at resonance, Hz

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (3, 3):
            raise DomainError("crosstalk matrix must be 3x3 over (a, b, coupler)")
        if not np.allclose(np.diag(m), 1.0):
            raise DomainError("crosstalk matrix diagonal must be 1")
        off = m[~np.eye(3, dtype=bool)]
        if np.any(np.abs(off) > MAX_CROSSTALK + 1e-12):
            raise DomainError(f"off-diagonal crosstalk exceeds {MAX_CROSSTALK}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def with_stark_shift(cls, shift: float, to_a: float = 0.25, to_b: float = 0.0, **kw):
        """Scenario whose uncompensated Stark shift is ``shift`` Hz."""
        m = np.eye(3, dtype=complex)
        m[0, 2], m[1, 2] = to_a, to_b
        amp = kw.get("drive_amp", 1.0)
        coupled = (abs(to_a) ** 2 + abs(to_b) ** 2) * amp ** 2
        if coupled == 0:
            raise DomainError("no crosstalk to produce a Stark shift from")
        return cls(matrix=m, stark_coeff=shift / coupled, **kw)

    @property
    def bare_sum(self) -> float:
        return self.f_a + self.f_b

    def residual(self, comp: Compensation = Compensation()) -> np.ndarray:
        d = np.concatenate([comp.drives(), [self.drive_amp * np.exp(1j * self.drive_phase)]])
        return (self.matrix @ d)[:2]

    def stark_shift(self, comp: Compensation = Compensation()) -> float:
        return float(self.stark_coeff * np.sum(np.abs(self.residual(comp)) ** 2))

    def center(self, comp: Compensation = Compensation()) -> float:
        """True resonance frequency of the coupler drive."""
        return self.bare_sum - self.stark_shift(comp)

    def exact_compensation(self) -> Compensation:
        """Cancellation that zeroes the residual on both loops."""
        m = self.matrix
        rhs = -m[:2, 2] * self.drive_amp * np.exp(1j * self.drive_phase)
        c = np.linalg.solve(m[:2, :2], rhs)
        return Compensation(float(abs(c[0])), float(np.angle(c[0])), float(abs(c[1])), float(np.angle(c[1])))


def rabi_population(detuning, rabi: float, t):
    """Two-level Rabi formula with rates in Hz and ``t`` in seconds."""
    detuning = np.asarray(detuning, float)
    omega2 = rabi ** 2 + detuning ** 2
    return rabi ** 2 / omega2 * np.sin(np.pi * np.sqrt(omega2) * np.asarray(t)) ** 2


def chevron_map(s: CrosstalkScenario, comp: Compensation, freqs, lengths) -> np.ndarray:
    """Population grid with shape ``(len(freqs), len(lengths))``."""
    delta = np.asarray(freqs, float)[:, None] - s.center(comp)
    return rabi_population(delta, s.rabi, np.asarray(lengths, float)[None, :])


def contrast(s: CrosstalkScenario, comp: Compensation, freq: float, lengths) -> float:
    """Twice the mean population over the length sweep at one drive frequency."""
    return float(2.0 * np.mean(chevron_map(s, comp, [freq], lengths)))


def chevron_center(freqs, grid) -> float:
    """Drive frequency of maximum contrast, refined by a parabola through the peak."""
    freqs = np.asarray(freqs, float)
    c = 2.0 * np.mean(np.asarray(grid), axis=1)
    i = int(np.argmax(c))
    if 0 < i < len(c) - 1:
        y0, y1, y2 = c[i - 1], c[i], c[i + 1]
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            return float(freqs[i] + 0.5 * (y0 - y2) / denom * (freqs[1] - freqs[0]))
    return float(freqs[i])
