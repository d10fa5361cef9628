"""Exact discrete inverse of the sum-of-exponentials line model.

With ``u = z - 1`` and ``mu_k = 1 - rho_k`` the line is

    H = A - sum_k a_k mu_k / (u + mu_k),    A = 1 + sum_k a_k,

so its zeros are ``u = -nu_j`` with ``nu`` the eigenvalues of
``diag(mu) + b 1^T``, ``b_k = -a_k mu_k / A``.  The inverse is a constant plus
one one-pole filter per zero:

    1/H = 1/A + sum_j R_j / (z - p_j),   p_j = 1 - nu_j,
    R_j = (1/A) prod_k (mu_k - nu_j) / prod_{i != j} (nu_i - nu_j).
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from ..device.flux import TransferFunction
from ..dsp import ComplexWaveform
from ..errors import DomainError
from .expfit import ExpFitResult


def inverse_filter(h: TransferFunction, f_s: float):
    """``(direct_gain, residues, poles)`` of the inverse line."""
    if not h.terms:
        return 1.0, np.zeros(0), np.zeros(0)
    a = h.amplitudes
    mu = -np.expm1(-1.0 / (f_s * h.taus))
    gain = 1.0 + a.sum()
    if gain <= 0:
        raise DomainError(f"line is not invertible: initial step value {gain:.3g} is not positive")
    b = -a * mu / gain
    nu = np.linalg.eigvals(np.diag(mu) + np.outer(b, np.ones_like(mu)))
    poles = 1.0 - nu
    if np.any(np.abs(poles) >= 1.0):
        raise DomainError("inverse line is unstable (a zero lies on or outside the unit circle)")
    res = np.empty(len(nu), dtype=complex)
    for j, v in enumerate(nu):
        others = np.delete(nu, j)
        res[j] = np.prod(mu - v) / np.prod(others - v) / gain
    return 1.0 / gain, res, poles


def predistort(h, target, f_s: float | None = None):
    """Waveform that the line ``h`` turns into ``target``.

    ``h`` is a TransferFunction or an ExpFitResult; ``target`` an array or a
    ComplexWaveform (which also supplies the sample rate).
    """
    if isinstance(h, ExpFitResult):
        h = h.transfer_function
    if isinstance(target, ComplexWaveform):
        data, f_s = target.samples, target.clock.f_s if f_s is None else f_s
    else:
        data = np.asarray(target)
    if f_s is None:
        raise DomainError("a sample rate is needed for a plain array")
    direct, res, poles = inverse_filter(h, f_s)
    out = direct * data.astype(complex)
    for r, p in zip(res, poles):
        out = out + lfilter([0.0, r], [1.0, -p], data)
    if not np.iscomplexobj(data):
        out = out.real
    if isinstance(target, ComplexWaveform):
        return ComplexWaveform(out, target.clock, target.start, target.saturated)
    return out
