"""Flux-line step-response calibration against the simulated qubit.

A flux step of amplitude ``x0`` detunes the qubit by ``-c (g x0 s(t))^2``, so
the normalised line response is ``s(t) = sqrt(Delta(t) / Delta_target)``.
Short times are read from Ramsey quadratures, long times optionally from
Lorentzian fits of spectroscopy sweeps; both feed the exponential fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..device.flux import (FluxQubit, TransferFunction, apply_channel, probe_linewidth,
                           ramsey_traces, spectroscopy_population)
from ..errors import DomainError, FitError
from .detuning import extract_detuning, signals_from_populations
from .expfit import ExpFitResult, fit_exponentials, refine
from .lorentz import fit_lorentzian
from .predistort import predistort

F_DAC = 6.88128e9


@dataclass(frozen=True)
class FluxCalibrationConfig:
    target_detuning: float = -100e6  # Hz
    f_s: float = F_DAC
    horizon: float = 50e-6  # s of Ramsey data
    n_fit_points: int = 1500
    n_terms: int = 4
    settle_time: float = 10e-9
    settle_tol: float = 1e-3
    approach_time: float = 1e-9
    approach_tol: float = 1e-2


@dataclass(frozen=True)
class ResponseTrace:
    t: np.ndarray  # s, centre of each difference stencil
    response: np.ndarray  # normalised line response, 1 = on target

    def __len__(self):
        return len(self.t)


@dataclass
class FluxCalibration:
    fit: ExpFitResult
    measured: ResponseTrace  # open-loop data the fit was made on
    closed_loop: ResponseTrace | None = None
    drive: np.ndarray | None = None  # pre-distorted waveform
    notes: list = field(default_factory=list)

    def settle_error(self, after: float) -> float:
        """Largest ``|response - 1|`` of the closed loop at ``t >= after``."""
        if self.closed_loop is None:
            raise DomainError("closed loop not measured")
        sel = self.closed_loop.t >= after
        return float(np.max(np.abs(self.closed_loop.response[sel] - 1.0)))


def step_drive(q: FluxQubit, target_detuning: float, n: int) -> np.ndarray:
    return np.full(n, q.amplitude_for(target_detuning))


def ramsey_response(q: FluxQubit, line: TransferFunction, drive, target_detuning: float,
                    f_s: float) -> ResponseTrace:
    """Normalised response seen through Ramsey detuning extraction.

    Points are placed half a sample early: the central difference at index
    ``n`` averages the held detuning of samples ``n-1`` and ``n``.  The two
    one-sided end points are dropped.
    """
    delivered = apply_channel(np.asarray(drive, float), line, f_s)
    p_x, p_y = ramsey_traces(q, delivered, f_s)
    x, y = signals_from_populations(p_x, p_y)
    trace = extract_detuning(x, y, 1.0 / f_s)
    ratio = trace.delta[1:-1] / target_detuning
    t = trace.t[1:-1] - 0.5 / f_s
    ok = trace.valid[1:-1]
    return ResponseTrace(t[ok], np.sqrt(np.clip(ratio[ok], 0.0, None)))


def spectroscopy_response(q: FluxQubit, line: TransferFunction, drive, target_detuning: float,
                          f_s: float, delays, sigma: float = 7e-9, span: float = 6.0,
                          n_freqs: int = 41) -> ResponseTrace:
    """Normalised response from one Lorentzian fit per probe delay (samples).

    The sweep is centred on the expected step frequency and spans ``span``
    probe linewidths.
    """
    delivered = apply_channel(np.asarray(drive, float), line, f_s)
    gamma = probe_linewidth(sigma)
    f_target = q.f_sweet + target_detuning
    t, r = [], []
    for d in np.asarray(delays, int):
        freqs = f_target + np.linspace(-span / 2, span / 2, n_freqs) * gamma
        pops = spectroscopy_population(q, delivered, int(d), freqs, f_s, sigma)
        try:
            c = fit_lorentzian(freqs, pops).center
        except FitError:
            continue
        t.append(d / f_s)
        r.append(np.sqrt(max((c - q.f_sweet) / target_detuning, 0.0)))
    return ResponseTrace(np.array(t), np.array(r))


def log_subsample(trace: ResponseTrace, n: int) -> ResponseTrace:
    """Keep about ``n`` points spaced evenly in log time."""
    if len(trace) <= n:
        return trace
    idx = np.unique(np.geomspace(1, len(trace), n).astype(int) - 1)
    return ResponseTrace(trace.t[idx], trace.response[idx])


def merge_calibrations(short: ExpFitResult, long: ExpFitResult, data: ResponseTrace) -> ExpFitResult:
    """Concatenate the two term sets and refine them jointly on ``data``."""
    terms = tuple(sorted(short.terms + long.terms, key=lambda p: p[1]))
    if len(terms) > 4:
        raise DomainError("merged model has more than 4 terms")
    start = ExpFitResult(terms, float("nan"), len(terms))
    return refine(start, data.t, data.response)


def calibrate_flux_line(q: FluxQubit, line: TransferFunction,
                        cfg: FluxCalibrationConfig = FluxCalibrationConfig(),
                        method: str = "ramsey") -> FluxCalibration:
    """Measure, fit, pre-distort and re-measure one flux line.

    ``method="ramsey"`` fits all terms on the Ramsey data.  ``"split"`` fits
    two terms on the first microsecond of Ramsey data and two on
    spectroscopy at later delays, then merges them.
    """
    n = int(round(cfg.horizon * cfg.f_s))
    target = step_drive(q, cfg.target_detuning, n)
    measured = ramsey_response(q, line, target, cfg.target_detuning, cfg.f_s)
    data = log_subsample(measured, cfg.n_fit_points)
    notes = []
    if method == "ramsey":
        fit = fit_exponentials(data.t, data.response, cfg.n_terms)
    elif method == "split":
        short_sel = data.t <= 1e-6
        short = fit_exponentials(data.t[short_sel], data.response[short_sel], 2)
        delays = np.unique(np.geomspace(1e-6 * cfg.f_s, n - 1, 60).astype(int))
        spec = spectroscopy_response(q, line, target, cfg.target_detuning, cfg.f_s, delays)
        long = fit_exponentials(spec.t, spec.response, 2)
        joined = ResponseTrace(np.concatenate([data.t[short_sel], spec.t]),
                               np.concatenate([data.response[short_sel], spec.response]))
        fit = merge_calibrations(short, long, joined)
        notes.append(f"{len(spec)} spectroscopy points above 1 us")
        fresh = fit_exponentials(joined.t, joined.response, cfg.n_terms)
        if fresh.residual_norm < fit.residual_norm:
            fit = fresh
            notes.append("joint refit from scratch beat the merged terms")
    else:
        raise DomainError(f"unknown method {method!r}")
    notes.extend(fit.notes)
    drive = predistort(fit, target, cfg.f_s)
    closed = ramsey_response(q, line, drive, cfg.target_detuning, cfg.f_s)
    return FluxCalibration(fit, measured, closed, drive, notes)


def random_transfer_function(rng: np.random.Generator, max_terms: int = 4, max_amp: float = 0.5,
                             tau_range=(10e-9, 10e-6), f_s: float = F_DAC) -> TransferFunction:
    """Random line with a positive step response and a stable inverse.

    The sign of the response is lost when the detuning is square-rooted, so
    lines whose step response crosses zero cannot be calibrated this way.
    """
    from .predistort import inverse_filter

    lo, hi = np.log(tau_range[0]), np.log(tau_range[1])
    grid = np.concatenate([[0.0], np.geomspace(1e-11, 1e-4, 400)])
    while True:
        k = int(rng.integers(1, max_terms + 1))
        a = rng.uniform(-max_amp, max_amp, k)
        tau = np.exp(rng.uniform(lo, hi, k))
        h = TransferFunction(tuple(zip(a.tolist(), tau.tolist())))
        if np.min(h.step_response(grid)) <= 0.0:
            continue
        try:
            inverse_filter(h, f_s)
        except DomainError:
            continue
        return h
