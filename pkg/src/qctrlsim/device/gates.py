"""Two-qubit state-vector algebra for the parametric sqrt(bSWAP) gate.

Basis order is ``|00>, |01>, |10>, |11>`` with qubit A first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

BASIS = ("00", "01", "10", "11")


@dataclass(frozen=True)
class GatePhases:
    """Gate angle and the level phases picked up while the coupler drive is on."""

    theta: float = np.pi / 4
    phi_d: float = 0.0  # coupler drive phase
    phi_01: float = 0.0
    phi_10: float = 0.0
    phi_zz: float = 0.0

    @property
    def phi_11(self) -> float:
        return self.phi_01 + self.phi_10 + self.phi_zz


def bswap_unitary(g: GatePhases) -> np.ndarray:
    """The 4x4 gate matrix; only ``|00>`` and ``|11>`` mix."""
    c, s = np.cos(g.theta), np.sin(g.theta)
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = c
    u[0, 3] = 1j * np.exp(1j * g.phi_d) * s
    u[1, 1] = np.exp(1j * g.phi_01)
    u[2, 2] = np.exp(1j * g.phi_10)
    u[3, 0] = 1j * np.exp(1j * (g.phi_11 - g.phi_d)) * s
    u[3, 3] = np.exp(1j * g.phi_11) * c
    return u


def z_gates(phi_a, phi_b) -> np.ndarray:
    """``Z_A(phi_a) (x) Z_B(phi_b)`` as a diagonal 4x4 (or a stack, for array inputs)."""
    phi_a, phi_b = np.broadcast_arrays(np.asarray(phi_a, float), np.asarray(phi_b, float))
    d = np.stack([np.ones(phi_a.shape), np.exp(1j * phi_b), np.exp(1j * phi_a),
                  np.exp(1j * (phi_a + phi_b))], axis=-1)
    return d[..., :, None] * np.eye(4)


def rx(theta) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(theta) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def on_qubit(u: np.ndarray, qubit: str) -> np.ndarray:
    """Embed a single-qubit gate on qubit ``"A"`` or ``"B"``."""
    if qubit == "A":
        return np.kron(u, np.eye(2))
    if qubit == "B":
        return np.kron(np.eye(2), u)
    raise DomainError(f"qubit must be 'A' or 'B', got {qubit!r}")


def basis_state(label: str = "00") -> np.ndarray:
    psi = np.zeros(4, dtype=complex)
    psi[BASIS.index(label)] = 1.0
    return psi


def run_gate_sequence(ops, psi0=None) -> np.ndarray:
    """Apply 4x4 matrices in order (first element acts first) to ``psi0``.

    ``ops`` may also hold stacks of shape ``(..., 4, 4)``; the result then
    broadcasts over the leading axes.
    """
    ops = list(ops)
    if not ops:
        raise DomainError("gate sequence is empty")
    psi = basis_state("00") if psi0 is None else np.asarray(psi0, dtype=complex)
    if psi.shape[-1] != 4:
        raise DomainError(f"state must have 4 components, got shape {psi.shape}")
    for op in ops:
        op = np.asarray(op)
        if op.shape[-2:] != (4, 4):
            raise DomainError(f"gate must be 4x4, got shape {op.shape}")
        psi = np.einsum("...ij,...j->...i", op, psi)
    return psi


def populations(psi) -> np.ndarray:
    return np.abs(np.asarray(psi)) ** 2


def amplification_block(g: GatePhases, phi_a, phi_b) -> np.ndarray:
    """One block of the error-amplification sequence: the gate, then the Z pair."""
    return z_gates(phi_a, phi_b) @ bswap_unitary(g)


def amplified_populations(g: GatePhases, phi_a, phi_b, blocks: int = 402, psi0=None) -> np.ndarray:
    """Basis populations after ``blocks`` repetitions of :func:`amplification_block`.

    Vectorised over ``phi_a`` / ``phi_b``.  The block power is taken by repeated
    squaring of the 4x4 product, which equals the sequential state update.
    """
    if blocks < 1:
        raise DomainError("sequence needs at least one block")
    block = amplification_block(g, phi_a, phi_b)
    total = np.linalg.matrix_power(block, blocks)
    return populations(run_gate_sequence([total], psi0))


def bell_state() -> np.ndarray:
    """``(|00> + i|11>)/sqrt(2)``."""
    return np.array([1, 0, 0, 1j], dtype=complex) / np.sqrt(2)


def density(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def state_fidelity(rho, psi) -> float:
    psi = np.asarray(psi, dtype=complex)
    return float(np.real(psi.conj() @ rho @ psi))


def purity(rho) -> float:
    return float(np.real(np.trace(rho @ rho)))
