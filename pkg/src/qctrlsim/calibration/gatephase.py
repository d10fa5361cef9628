"""Drive-induced phase calibration of the sqrt(bSWAP) gate by error amplification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ..device.gates import (GatePhases, amplification_block, basis_state, amplified_populations,
                            on_qubit, populations, run_gate_sequence, rx, ry)
from ..errors import DomainError, FitError

TWO_PI = 2.0 * np.pi
FLAT_TOL = 0.05
DEFAULT_BLOCKS = 402
COMPANION_REPS = (1, 4, 16, 64)


@dataclass(frozen=True)
class GatePhaseResult:
    phi_a: float  # optimal Z_A correction, rad in [0, 2pi)
    phi_11: float  # inferred drive phase on |11>, rad in (-pi, pi]
    sensitivity: float  # steepest P11 change per degree on the main lobe
    peak_drop: float  # P11(opt) - min P11(opt +- 1 deg)
    sweep_deg: np.ndarray
    p11: np.ndarray
    phi_01: float | None = None
    phi_10: float | None = None

    @property
    def phi_zz(self) -> float | None:
        if self.phi_01 is None or self.phi_10 is None:
            return None
        return float(np.angle(np.exp(1j * (self.phi_11 - self.phi_01 - self.phi_10))))


def _p11(g, phi_a, blocks):
    return amplified_populations(g, phi_a, 0.0, blocks)[..., 3]


def sweep_gate_phase(g: GatePhases, blocks: int = DEFAULT_BLOCKS, step_deg: float = 1.0):
    """``(phi_A in degrees, P11)`` over ``[0, 360)`` starting from ``|00>``."""
    deg = np.arange(0.0, 360.0, step_deg)
    return deg, _p11(g, np.deg2rad(deg), blocks)


def calibrate_gate_phase(g: GatePhases, blocks: int = DEFAULT_BLOCKS, step_deg: float = 1.0,
                         companions: bool = True) -> GatePhaseResult:
    """Find the ``Z_A`` correction that turns ``blocks`` gates into a full transfer to ``|11>``.

    The ``|00>``/``|11>`` pair only rotates cleanly when the correction cancels
    the ``|11>`` phase, so ``phi_11 = -phi_A`` at the optimum.
    """
    if blocks % 4 != 2:
        raise DomainError(f"error amplification needs 4n+2 blocks, got {blocks}")
    deg, p = sweep_gate_phase(g, blocks, step_deg)
    if np.ptp(p) < FLAT_TOL:
        raise FitError(f"P11 varies by only {np.ptp(p):.3g} over the sweep; amplification failed")
    i = int(np.argmax(p))
    res = minimize_scalar(lambda x: -float(_p11(g, np.deg2rad(x), blocks)),
                          bounds=(deg[i] - step_deg, deg[i] + step_deg), method="bounded",
                          options={"xatol": 1e-9})
    best = float(np.mod(res.x, 360.0))
    at = float(_p11(g, np.deg2rad(best), blocks))
    drop = at - min(float(_p11(g, np.deg2rad(best + d), blocks)) for d in (-1.0, 1.0))
    sens = lobe_sensitivity(g, best, blocks)
    phi_a = float(np.deg2rad(best))
    phi_11 = float(np.angle(np.exp(-1j * phi_a)))
    phi_01 = phi_10 = None
    if companions:
        phi_01 = companion_phase(g, phi_a, "B")
        phi_10 = companion_phase(g, phi_a, "A")
    return GatePhaseResult(phi_a, phi_11, sens, drop, deg, p, phi_01, phi_10)


def lobe_sensitivity(g: GatePhases, best_deg: float, blocks: int = DEFAULT_BLOCKS,
                     resolution: float = 0.05, reach: float = 30.0) -> float:
    """Largest ``|P11(x + 1/2 deg) - P11(x - 1/2 deg)|`` over the peak's half-maximum lobe."""
    x = best_deg + np.arange(-reach, reach + resolution / 2, resolution)
    p = _p11(g, np.deg2rad(x), blocks)
    c = len(x) // 2
    half = p[c] / 2
    lo = c
    while lo > 0 and p[lo - 1] >= half:
        lo -= 1
    hi = c
    while hi < len(x) - 1 and p[hi + 1] >= half:
        hi += 1
    xs = x[lo:hi + 1]
    slope = _p11(g, np.deg2rad(xs + 0.5), blocks) - _p11(g, np.deg2rad(xs - 0.5), blocks)
    return float(np.max(np.abs(slope)))


def _quadratures(g: GatePhases, phi_a: float, qubit: str, m: int):
    """Joint-population estimate of ``conj(a_00) a_x`` after ``m`` corrected blocks.

    ``qubit`` is put on the equator by a Y pi/2 pulse; the other stays in 0.
    The two readout rotations map the real and imaginary part onto the
    population difference conditioned on the other qubit being in 0.
    """
    prep = on_qubit(ry(np.pi / 2), qubit)
    block = amplification_block(g, phi_a, 0.0)
    body = [prep, np.linalg.matrix_power(block, m)]
    other = 1 if qubit == "B" else 2  # index of |01> or |10>
    out = []
    for rot in (ry(-np.pi / 2), rx(np.pi / 2)):
        p = populations(run_gate_sequence(body + [on_qubit(rot, qubit)], basis_state("00")))
        out.append(p[0] - p[other])
    return out[0] + 1j * out[1]


def companion_phase(g: GatePhases, phi_a: float, qubit: str, reps=COMPANION_REPS) -> float:
    """Single-excitation phase ``phi_01`` (qubit ``"B"``) or ``phi_10`` (``"A"``) per gate.

    Runs are repeated with growing block counts; each longer run is unwrapped
    onto the branch closest to the previous estimate.
    """
    if qubit not in ("A", "B"):
        raise DomainError(f"qubit must be 'A' or 'B', got {qubit!r}")
    est = None
    for m in reps:
        z = _quadratures(g, phi_a, qubit, m)
        # the |00> amplitude after m corrected blocks is cos(m theta): undo its sign
        sign = np.sign(np.cos(m * g.theta))
        if sign == 0:
            raise DomainError(f"{m} blocks leave no |00> amplitude to reference")
        total = np.angle(z * sign)
        if qubit == "A":
            total -= m * phi_a  # the Z_A correction also acts on |10>
        if est is None:
            est = float(np.angle(np.exp(1j * total))) / m
        else:
            k = np.round((m * est - total) / TWO_PI)
            est = float((total + TWO_PI * k) / m)
    return float(np.angle(np.exp(1j * est)))
