"""Sum-of-exponentials fitting by variable projection.

The model is ``y(t) = 1 + sum_k a_k exp(-t/tau_k)``.  For fixed time constants
the amplitudes follow from linear least squares, so only ``log(tau)`` is
iterated, with Levenberg-Marquardt on the projected residual (Kaufman's
Jacobian).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..device.flux import TransferFunction
from ..errors import DomainError, FitError

MAX_TERMS = 4
MAX_ITER = 200
STEP_TOL = 1e-10
COLLAPSE_TOL = 0.01


class CollapseWarning(UserWarning):
    """Two fitted time constants fell within 1% and were merged."""


@dataclass(frozen=True)
class ExpFitResult:
    terms: tuple  # ((a_k, tau_k), ...) sorted by tau
    residual_norm: float
    n_terms: int
    iterations: int = 0
    converged: bool = True
    notes: tuple = field(default=(), compare=False)

    @property
    def transfer_function(self) -> TransferFunction:
        return TransferFunction(self.terms)

    def __call__(self, t) -> np.ndarray:
        return self.transfer_function.step_response(t)


def _basis(t, log_tau):
    return np.exp(-t[:, None] / np.exp(log_tau)[None, :])


def _project(t, r, log_tau, w):
    phi = _basis(t, log_tau) * w[:, None]
    a, *_ = np.linalg.lstsq(phi, r * w, rcond=None)
    res = r * w - phi @ a
    return a, res, phi


def _jacobian(t, log_tau, a, phi, w):
    """Kaufman's approximation ``-P_perp dPhi/dtheta a``."""
    tau = np.exp(log_tau)
    d = phi * (t[:, None] / tau[None, :]) * a[None, :]
    q, _ = np.linalg.qr(phi)
    return -(d - q @ (q.T @ d))


def _lm(t, r, log_tau, w, max_iter=MAX_ITER, tol=STEP_TOL):
    t_pos = t[t > 0]
    lo = t_pos.min() if t_pos.size else 1e-12
    bounds = (np.log(lo * 1e-3), np.log(max(t.max(), lo) * 1e3))
    a, res, phi = _project(t, r, log_tau, w)
    cost = res @ res
    lam = 1e-3
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        jac = _jacobian(t, log_tau, a, phi, w)
        g = jac.T @ res
        h = jac.T @ jac
        improved = False
        for _ in range(30):
            step = np.linalg.lstsq(h + lam * np.diag(np.diag(h) + 1e-300), -g, rcond=None)[0]
            trial = np.clip(log_tau + step, *bounds)
            a_t, res_t, phi_t = _project(t, r, trial, w)
            cost_t = res_t @ res_t
            if np.isfinite(cost_t) and cost_t <= cost:
                log_tau, a, res, phi, cost = trial, a_t, res_t, phi_t, cost_t
                lam = max(lam / 10, 1e-12)
                improved = True
                break
            lam *= 10
        small = np.linalg.norm(step) < tol * (np.linalg.norm(log_tau) + tol)
        if not improved or small:
            converged = small or not improved
            break
    return log_tau, a, cost, it, bool(converged)


def _initial_taus(t, n_terms, shift=0.0):
    t_pos = t[t > 0]
    lo = t_pos.min() if t_pos.size else 1.0
    lo = max(lo, (t.max() - t.min()) * 1e-6)
    hi = t.max()
    edges = np.linspace(np.log(lo), np.log(hi), n_terms + 2)[1:-1]
    step = (np.log(hi) - np.log(lo)) / (n_terms + 1)
    return edges + shift * step


def _grow(t, r, w, n_terms, n_trials=8):
    """Add one term at a time, trying a spread of starting time constants."""
    out = _lm(t, r, _initial_taus(t, 1), w)
    span = _initial_taus(t, n_trials)
    for _ in range(1, n_terms):
        best = None
        for new in span:
            trial = _lm(t, r, np.append(out[0], new), w)
            if best is None or trial[2] < best[2]:
                best = trial
        out = best
    return out


def _merge_collapsed(log_tau, a, tol=COLLAPSE_TOL):
    order = np.argsort(log_tau)
    log_tau, a = log_tau[order], a[order]
    for i in range(len(log_tau) - 1):
        if abs(np.exp(log_tau[i + 1] - log_tau[i]) - 1) < tol:
            merged_tau = 0.5 * (log_tau[i] + log_tau[i + 1])
            keep = np.delete(log_tau, i + 1)
            keep[i] = merged_tau
            return keep, True
    return log_tau, False


def fit_exponentials(t, y, n_terms: int = MAX_TERMS, initial_taus=None, weights=None,
                     starts: int = 3) -> ExpFitResult:
    """Fit ``y = 1 + sum a_k exp(-t/tau_k)``.

    Parameters
    ----------
    t, y : array_like
        Sample times (s) and normalised step response.
    n_terms : int
        Number of exponentials, 1 to 4.
    initial_taus : sequence of float, optional
        Starting time constants; log-spaced over the trace when omitted.
    weights : array_like, optional
        Per-point weights on the residual.
    starts : int
        Extra starts with the log grid shifted, used only without ``initial_taus``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if not 1 <= n_terms <= MAX_TERMS:
        raise DomainError(f"n_terms must be 1..{MAX_TERMS}, got {n_terms}")
    if t.shape != y.shape or t.ndim != 1:
        raise DomainError("t and y must be 1-D and the same length")
    if len(t) < 4 * n_terms:
        raise DomainError(f"need at least {4 * n_terms} points for {n_terms} terms")
    keep = np.isfinite(y)
    t, y = t[keep], y[keep]
    w = np.ones_like(t) if weights is None else np.asarray(weights, float)[keep]
    r = y - 1.0
    if initial_taus is not None:
        guesses = [np.log(np.asarray(initial_taus, dtype=float))]
        if len(guesses[0]) != n_terms:
            raise DomainError("initial_taus length must equal n_terms")
    else:
        shifts = np.linspace(-0.4, 0.4, starts) if starts > 1 else [0.0]
        guesses = [_initial_taus(t, n_terms, s) for s in shifts]
    best = None
    for g in guesses:
        out = _lm(t, r, g, w)
        if best is None or out[2] < best[2]:
            best = out
    if initial_taus is None and n_terms > 1:
        grown = _grow(t, r, w, n_terms)
        if grown[2] < best[2]:
            best = grown
    log_tau, a, cost, it, converged = best
    notes = []
    while len(log_tau) > 1:
        merged, hit = _merge_collapsed(log_tau, a)
        if not hit:
            break
        notes.append("time constants within 1% merged")
        warnings.warn("fitted time constants collapsed; merged into one term", CollapseWarning)
        log_tau, a, cost, it2, converged = _lm(t, r, merged, w)
        it += it2
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(log_tau))):
        raise FitError("exponential fit diverged", residual=float(np.sqrt(cost)))
    if not converged:
        notes.append(f"stopped after {MAX_ITER} iterations")
    terms = tuple(sorted(zip(a.tolist(), np.exp(log_tau).tolist()), key=lambda p: p[1]))
    return ExpFitResult(terms, float(np.sqrt(cost)), len(terms), it, converged, tuple(notes))


def refine(result: ExpFitResult, t, y, weights=None) -> ExpFitResult:
    """Re-run the fit from the time constants of ``result``."""
    taus = [tau for _, tau in result.terms]
    return fit_exponentials(t, y, len(taus), initial_taus=taus, weights=weights)
