"""Lorentzian line fits for spectroscopy sweeps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from ..errors import DomainError, FitError

NOISE_FLOOR = 1e-4


@dataclass(frozen=True)
class LorentzFit:
    center: float
    width: float  # full width at half maximum
    amplitude: float
    residual_norm: float

    def __call__(self, f):
        return lorentzian(f, self.center, self.width, self.amplitude)


def lorentzian(f, center, width, amplitude):
    return amplitude / (1.0 + (2.0 * (np.asarray(f, float) - center) / width) ** 2)


def _half_max_width(f, p, i):
    half = p[i] / 2
    left = np.flatnonzero(p[:i] < half)
    right = np.flatnonzero(p[i:] < half)
    lo = f[left[-1]] if left.size else f[0]
    hi = f[i + right[0]] if right.size else f[-1]
    return max(hi - lo, 2 * abs(f[1] - f[0]))


def fit_lorentzian(freqs, populations, noise_floor: float = NOISE_FLOOR) -> LorentzFit:
    """Least-squares Lorentzian ``A / (1 + (2 (f - f0) / w)^2)``.

    Raises FitError when the peak does not clear ``noise_floor`` above the
    median level or the fitted centre leaves the sweep.
    """
    f = np.asarray(freqs, dtype=float)
    p = np.asarray(populations, dtype=float)
    if f.shape != p.shape or f.ndim != 1:
        raise DomainError("freqs and populations must be 1-D and the same length")
    if len(f) < 5:
        raise DomainError("need at least 5 points")
    order = np.argsort(f)
    f, p = f[order], p[order]
    i = int(np.argmax(p))
    if p[i] - np.median(p) < noise_floor:
        raise FitError("no peak above the noise floor", residual=None)
    # scale to O(1) so the solver's tolerances are meaningful
    f_mid, f_span = f[i], f[-1] - f[0]
    x = (f - f_mid) / f_span
    w0 = _half_max_width(f, p, i) / f_span

    def resid(q):
        return lorentzian(x, q[0], q[1], q[2]) - p

    sol = least_squares(resid, [0.0, w0, p[i]], x_scale=[w0, w0, p[i]],
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    c, w, a = sol.x
    center = f_mid + c * f_span
    if not f[0] <= center <= f[-1]:
        raise FitError(f"fitted centre {center:.6g} lies outside the sweep",
                       residual=float(np.linalg.norm(sol.fun)))
    return LorentzFit(float(center), float(abs(w) * f_span), float(a), float(np.linalg.norm(sol.fun)))
