"""Phase relations of parametric exchange and parametric measurement.

Also holds the slow phase-drift model of a free-running analog LO chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..errors import DomainError

TWO_PI = 2.0 * np.pi


def iswap_readout_phase(phi1, phip, phi2):
    """``<sigma_z>`` of the target qubit after exchange and a phase-phi2 pi/2 pulse."""
    return -np.cos(np.asarray(phi1) + phip - phi2)


@dataclass(frozen=True)
class ParametricScenario:
    """Two qubits exchanged through a pump at ``fp = f2 - f1 + delta``."""

    f1: float
    f2: float
    delta: float = 0.0
    g_eff: float = 1e6
    phi1: float = 0.0
    phip: float = 0.0
    phi2: float = 0.0
    phi_q: float = 0.0
    phi_g: float = 0.0
    phi_c: float = 0.0

    def __post_init__(self):
        if not self.f2 > self.f1:
            raise DomainError("the exchange convention needs f2 > f1")

    @property
    def fp(self) -> float:
        return self.f2 - self.f1 + self.delta

    @property
    def phi_m(self) -> float:
        return (self.phi_g - self.phi_c) / 2

    @property
    def phi_s(self) -> float:
        return (self.phi_g + self.phi_c) / 2

    def exchange_readout(self) -> float:
        return float(iswap_readout_phase(self.phi1, self.phip, self.phi2))


def measurement_axis(phi_g, phi_c) -> np.ndarray:
    """Unit vector ``(cos phi_m, -sin phi_m, 0)`` with ``phi_m = (phi_g - phi_c)/2``."""
    phi_m = (np.asarray(phi_g, float) - phi_c) / 2
    return np.stack([np.cos(phi_m), -np.sin(phi_m), np.zeros_like(phi_m)], axis=-1)


def parametric_project(bloch, phi_g, phi_c) -> np.ndarray:
    """Bloch vector after measuring along the pump-defined axis (ensemble average).

    The component along the axis survives; everything else, including z, is lost.
    """
    b = np.asarray(bloch, dtype=float)
    if np.any(np.linalg.norm(b, axis=-1) > 1 + 1e-12):
        raise DomainError("Bloch vector longer than 1")
    n = measurement_axis(phi_g, phi_c)
    return np.sum(b * n, axis=-1, keepdims=True) * n


def equator_state(azimuth) -> np.ndarray:
    """Bloch vector of an equatorial state at ``azimuth``."""
    a = np.asarray(azimuth, float)
    return np.stack([np.cos(a), np.sin(a), np.zeros_like(a)], axis=-1)


def bloch_length_after_measurement(phi_q, phi_g, phi_c) -> np.ndarray:
    """``R`` after projecting a qubit prepared by a drive of phase ``phi_q``.

    The prepared state sits at azimuth ``-phi_q``, so ``R = |cos(phi_q - phi_m)|``.
    """
    out = parametric_project(equator_state(-np.asarray(phi_q, float)), phi_g, phi_c)
    return np.linalg.norm(out, axis=-1)


@dataclass(frozen=True)
class AnalogLoModel:
    """Free-running LO chains with slow phase wander.

    Every channel's extra phase is a sinusoid (PLL wander), a linear thermal
    ramp and a Gaussian random walk, all drawn from ``seed``.
    """

    lo: dict = field(default_factory=dict)  # channel -> LO frequency (Hz)
    pll_period: float = 360.0  # s
    pll_amplitude: float = 0.2  # rad
    thermal_rate: float = 0.05  # rad per hour
    walk_sigma: float = 1e-3  # rad per sqrt(s)
    seed: int = 0

    def drift(self, channel: str, t) -> np.ndarray:
        """Drift phase of one channel at times ``t`` (seconds, ascending)."""
        t = np.asarray(t, dtype=float)
        names = sorted(self.lo)
        if channel not in names:
            raise DomainError(f"no LO declared for {channel!r}")
        rng = np.random.default_rng([self.seed, names.index(channel)])
        amp = self.pll_amplitude * rng.uniform(0.5, 1.5)
        phase0 = rng.uniform(0, TWO_PI)
        rate = self.thermal_rate * rng.uniform(-1.0, 1.0) / 3600.0
        dt = np.diff(t, prepend=t[0] if t.size else 0.0)
        walk = np.cumsum(rng.standard_normal(t.shape) * self.walk_sigma * np.sqrt(dt))
        return amp * np.sin(TWO_PI * t / self.pll_period + phase0) + rate * t + walk

    def carrier_phase(self, channel: str, t_samples, f_s: Fraction) -> np.ndarray:
        """``2 pi f_L t mod 2 pi`` at integer sample times, exactly reduced."""
        lo = Fraction(self.lo[channel])
        return np.array([TWO_PI * float((lo * int(n) / f_s) % 1) for n in np.atleast_1d(t_samples)])


def fit_axis_sweep(phi_c, r_squared):
    """Least-squares fit of ``R^2 = a + b cos phi_c + c sin phi_c``; returns the optimum phi_c.

    ``r_squared`` may hold one sweep per row.
    """
    phi_c = np.asarray(phi_c, float)
    design = np.stack([np.ones_like(phi_c), np.cos(phi_c), np.sin(phi_c)], axis=-1)
    r2 = np.asarray(r_squared, float)
    coef, *_ = np.linalg.lstsq(design, r2.T, rcond=None)
    best = np.mod(np.arctan2(coef[2], coef[1]), TWO_PI)
    return float(best) if r2.ndim == 1 else best
