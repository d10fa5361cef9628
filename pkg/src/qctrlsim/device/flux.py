"""Flux-line distortion and a flux-tunable qubit biased at its sweet spot.

The line is a sum-of-exponentials step response ``s(t) = 1 + sum a_k exp(-t/tau_k)``.
Its discrete form is exact at the sample instants: every term is a one-pole
recursion driven by the first difference of the input,

    z_k[n] = rho_k z_k[n-1] + x[n] - x[n-1],   rho_k = exp(-T/tau_k)
    y[n]   = x[n] + sum_k a_k z_k[n]

so a unit step returns ``s(nT)`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ..dsp import ComplexWaveform
from ..errors import DomainError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TransferFunction:
    """Step response ``1 + sum a_k exp(-t/tau_k)``; DC gain is 1 by construction."""

    terms: tuple = ()  # ((a_k, tau_k seconds), ...)

    def __post_init__(self):
        terms = tuple((float(a), float(tau)) for a, tau in self.terms)
        for a, tau in terms:
            if not tau > 0:
                raise DomainError(f"time constant must be positive, got {tau}")
            if not np.isfinite(a):
                raise DomainError("amplitude must be finite")
        object.__setattr__(self, "terms", tuple(sorted(terms, key=lambda p: p[1])))

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([a for a, _ in self.terms])

    @property
    def taus(self) -> np.ndarray:
        return np.array([tau for _, tau in self.terms])

    @property
    def initial_value(self) -> float:
        """``s(0) = 1 + sum a_k``, the high-frequency gain."""
        return 1.0 + float(self.amplitudes.sum()) if self.terms else 1.0

    def step_response(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.ones_like(t)
        for a, tau in self.terms:
            out = out + a * np.exp(-t / tau)
        return out

    def poles(self, f_s: float) -> np.ndarray:
        return np.exp(-1.0 / (f_s * self.taus))


def _as_array(x):
    if isinstance(x, ComplexWaveform):
        return x.samples, x.clock.f_s
    return np.asarray(x), None


def apply_channel(x, h: TransferFunction, f_s: float | None = None):
    """Pass waveform ``x`` (array or ComplexWaveform) through the line ``h``.

    Samples before the start of ``x`` are taken as zero.
    """
    data, wf_rate = _as_array(x)
    f_s = wf_rate if f_s is None else f_s
    if f_s is None:
        raise DomainError("a sample rate is needed for a plain array")
    y = data.astype(np.result_type(data, float), copy=True)
    for a, rho in zip(h.amplitudes, h.poles(f_s)):
        y = y + a * lfilter([1.0, -1.0], [1.0, -rho], data)
    if isinstance(x, ComplexWaveform):
        return ComplexWaveform(y, x.clock, x.start, x.saturated)
    return y


def impulse_response(h: TransferFunction, n: int, f_s: float) -> np.ndarray:
    """First difference of the sampled step response, ``s[n] - s[n-1]``."""
    s = h.step_response(np.arange(n) / f_s)
    return np.diff(s, prepend=0.0)


@dataclass(frozen=True)
class FluxQubit:
    """Sweet-spot qubit: ``f = f_sweet - curvature * (flux_gain * x)**2``."""

    f_sweet: float
    curvature: float  # Hz per flux quantum squared
    flux_gain: float = 1.0  # flux per unit of waveform amplitude

    def __post_init__(self):
        if self.curvature <= 0:
            raise DomainError("curvature must be positive at a frequency maximum")

    def detuning(self, flux_waveform) -> np.ndarray:
        """``f(t) - f_sweet``."""
        x = np.real(np.asarray(flux_waveform))
        return -self.curvature * (self.flux_gain * x) ** 2

    def amplitude_for(self, detuning: float) -> float:
        """Waveform amplitude that produces a (negative) ``detuning``."""
        if detuning > 0:
            raise DomainError("a sweet-spot qubit can only be tuned down")
        return float(np.sqrt(-detuning / self.curvature) / self.flux_gain)


def qubit_freq(q: FluxQubit, flux_waveform) -> np.ndarray:
    return q.f_sweet + q.detuning(flux_waveform)


def accumulated_phase(q: FluxQubit, flux_waveform, f_s: float) -> np.ndarray:
    """``phi[n] = 2 pi T sum_{m<n} Delta[m]`` for ``n = 0 .. len``.

    The flux is held constant over each sample period, so this is the exact
    integral of the detuning up to the start of sample ``n``.
    """
    d = q.detuning(flux_waveform)
    return TWO_PI / f_s * np.concatenate([[0.0], np.cumsum(d)])


def _rx(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def ramsey_from_phase(phi, final_axis: str = "X") -> np.ndarray:
    """Excited population after ``X90 - free evolution(phi) - {X,Y}90``.

    Evaluated as an explicit 2x2 product, vectorised over ``phi``.
    """
    if final_axis not in ("X", "Y"):
        raise DomainError("final axis must be 'X' or 'Y'")
    phi = np.asarray(phi, dtype=float)
    psi0 = _rx(np.pi / 2) @ np.array([1.0, 0.0], dtype=complex)
    # free evolution in the drive frame: |1> picks up exp(i phi)
    psi = np.stack([np.full(phi.shape, psi0[0]), psi0[1] * np.exp(1j * phi)], axis=-1)
    last = _rx(np.pi / 2) if final_axis == "X" else _ry(np.pi / 2)
    out = psi @ last.T
    return np.abs(out[..., 1]) ** 2


def ramsey_population(q: FluxQubit, flux_pulse, t: int, final_axis: str = "X",
                      f_s: float | None = None) -> float:
    """Population after a flux pulse of ``t`` samples between two pi/2 pulses."""
    data, wf_rate = _as_array(flux_pulse)
    f_s = wf_rate if f_s is None else f_s
    if not 0 <= t <= len(data):
        raise DomainError(f"pulse length {t} is outside the waveform support")
    phi = accumulated_phase(q, data[:t], f_s)[-1]
    return float(ramsey_from_phase(phi, final_axis))


def ramsey_traces(q: FluxQubit, flux_pulse, f_s: float | None = None):
    """X and Y populations for every pulse length ``0 .. len(flux_pulse)``.

    A causal line makes the first ``t`` delivered samples independent of where
    the pulse is cut, so one delivered waveform serves the whole sweep.
    """
    data, wf_rate = _as_array(flux_pulse)
    f_s = wf_rate if f_s is None else f_s
    phi = accumulated_phase(q, data, f_s)
    return ramsey_from_phase(phi, "X"), ramsey_from_phase(phi, "Y")


def probe_linewidth(sigma: float) -> float:
    """FWHM (Hz) of the power spectrum of a Gaussian probe with time sigma."""
    return float(np.sqrt(np.log(2.0)) / (np.pi * sigma))


def probe_window(sigma: float, f_s: float, width: float = 4.0):
    """Gaussian probe envelope sampled over +-``width`` sigma, normalised to unit sum."""
    half = int(np.ceil(width * sigma * f_s))
    n = np.arange(-half, half + 1)
    g = np.exp(-0.5 * (n / (sigma * f_s)) ** 2)
    return n, g / g.sum()


def spectroscopy_population(q: FluxQubit, flux_pulse, delay: int, probe_freq,
                            f_s: float | None = None, sigma: float = 7e-9,
                            area: float = np.pi / 2) -> np.ndarray:
    """Weak Gaussian probe centred ``delay`` samples after the flux pulse starts.

    Returns a Lorentzian in ``probe_freq`` centred on the probe-weighted mean
    qubit frequency, with the Fourier-limited width of the probe and peak
    ``sin^2(area/2)``.
    """
    data, wf_rate = _as_array(flux_pulse)
    f_s = wf_rate if f_s is None else f_s
    n, g = probe_window(sigma, f_s)
    idx = delay + n
    freq = np.full(idx.shape, q.f_sweet)
    inside = (idx >= 0) & (idx < len(data))
    freq[inside] = qubit_freq(q, data[idx[inside]])
    if np.any(idx >= len(data)):
        freq[idx >= len(data)] = qubit_freq(q, data[-1:])[0]
    center = float(np.dot(g, freq))
    gamma = probe_linewidth(sigma)
    peak = np.sin(area / 2) ** 2
    return peak / (1.0 + (2.0 * (np.asarray(probe_freq) - center) / gamma) ** 2)


def spectroscopy_integrated(q: FluxQubit, flux_pulse, delay: int, probe_freq: float,
                            f_s: float, sigma: float = 7e-9, area: float = np.pi / 2) -> float:
    """Time-dependent two-level integration of the same probe (reference model).

    Piecewise-constant Hamiltonian per sample in the probe frame; used to check
    where the line sits, not its shape.
    """
    data = np.asarray(flux_pulse)
    n, g = probe_window(sigma, f_s)
    idx = delay + n
    clipped = np.clip(idx, 0, len(data) - 1)
    det = qubit_freq(q, data[clipped]) - probe_freq
    det[idx < 0] = q.f_sweet - probe_freq
    # rotation angle per sample, normalised so the pulse area is ``area``
    omega = area * g  # radians per sample
    psi = np.array([1.0, 0.0], dtype=complex)
    for w, d in zip(omega, det):
        phi = TWO_PI * d / f_s  # z rotation per sample
        norm = np.hypot(w, phi)
        if norm == 0:
            continue
        c, s = np.cos(norm / 2), np.sin(norm / 2)
        nx, nz = w / norm, phi / norm
        u = np.array([[c - 1j * nz * s, -1j * nx * s], [-1j * nx * s, c + 1j * nz * s]])
        psi = u @ psi
    return float(abs(psi[1]) ** 2)
