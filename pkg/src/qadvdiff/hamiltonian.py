"""Dense operator constructions used as the reference for every circuit.

Time evolution convention: a step of length t applies exp(-iHt).  With
H₂ = (v/2)·S₂ this transports in +x for v > 0, and the η-weighted S₁/S_D
blocks recover as dissipation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import CapacityError, ContractError, ShapeError
from .grid import GridSpec, TransportSpec
from .statevec import QuantumState

MAX_DENSE_QUBITS = 12

SIGMA_01 = np.array([[0, 1], [0, 0]], dtype=np.complex128)  # |0><1|
SIGMA_10 = np.array([[0, 0], [1, 0]], dtype=np.complex128)  # |1><0|
SIGMA_00 = np.array([[1, 0], [0, 0]], dtype=np.complex128)
SIGMA_11 = np.array([[0, 0], [0, 1]], dtype=np.complex128)


def _kron(*mats) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=np.complex128))


def ladder_ops(n_alpha: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """s_j^+ = I^{⊗(n-j)} ⊗ σ₁₀ ⊗ σ₀₁^{⊗(j-1)} (leftmost factor = most significant qubit).

    s_j^+ maps |…0 1…1> (j-1 trailing ones) to |…1 0…0>: the carry chain of an
    increment that stops at bit j-1.
    """
    if not 1 <= j <= n_alpha:
        raise ValueError(f"need 1 <= j <= {n_alpha}, got {j}")
    eye = np.eye(2 ** (n_alpha - j), dtype=np.complex128)
    s_plus = _kron(eye, SIGMA_10, *([SIGMA_01] * (j - 1)))
    return s_plus, s_plus.conj().T


def shift_operator(n_alpha: int) -> np.ndarray:
    """Cyclic increment P|j> = |j+1 mod N>, assembled from the ladder terms."""
    p = _kron(*([SIGMA_01] * n_alpha))  # |0…0><1…1| wraps the top point to 0
    for j in range(1, n_alpha + 1):
        p = p + ladder_ops(n_alpha, j)[0]
    return p


def build_S(n_alpha: int, kind: str) -> np.ndarray:
    """S1 = S_D = P + P† − 2I;  S2 = −i(P† − P)."""
    if n_alpha < 1:
        raise ValueError("n_alpha must be >= 1")
    p = shift_operator(n_alpha)
    if kind in ("S1", "SD"):
        return p + p.conj().T - 2 * np.eye(2 ** n_alpha)
    if kind == "S2":
        return -1j * (p.conj().T - p)
    raise ValueError(f"unknown operator kind {kind!r}")


@dataclass(frozen=True)
class GammaSet:
    gamma_D: float
    gamma_1: float
    gamma_2: float

    @classmethod
    def of(cls, v: float, D: float, R: float, h: float = 1.0) -> "GammaSet":
        return cls(D / (h * h * R), abs(v) / (2 * h * R), v / (2 * h))


def _on_axis(op: np.ndarray, grid: GridSpec, label: str) -> np.ndarray:
    """Embed a single-axis operator into the system register (x is least significant)."""
    mats = []
    for lab, n in zip(grid.labels, grid.n_axis):
        mats.append(op if lab == label else np.eye(2 ** n, dtype=np.complex128))
    return _kron(*reversed(mats))


def _position(grid: GridSpec, label: str) -> np.ndarray:
    return _on_axis(np.diag(np.arange(grid.length(label), dtype=np.complex128)), grid, label)


def build_full_H(grid: GridSpec, transport: TransportSpec, D: float) -> np.ndarray:
    """Σ_k η_k (H_D + H₁) ⊗ |k><k| + H₂ ⊗ I on (system ⊗ ancilla), η_k = k − N_p/2."""
    if grid.n_qubits > MAX_DENSE_QUBITS:
        raise CapacityError(f"dense Hamiltonians are capped at {MAX_DENSE_QUBITS} qubits")
    transport.check_grid(grid)
    dim = 2 ** grid.n_system
    h1 = np.zeros((dim, dim), dtype=np.complex128)
    h2 = np.zeros((dim, dim), dtype=np.complex128)
    eye = np.eye(dim, dtype=np.complex128)
    for label, n in zip(grid.labels, grid.n_axis):
        s1 = _on_axis(build_S(n, "S1"), grid, label)
        s2 = _on_axis(build_S(n, "S2"), grid, label)
        h1 += (D / grid.R) * s1
        t = transport[label]
        if t.is_linear:
            pos = _position(grid, t.control)
            h1 += (abs(t.scale) / (2 * grid.R)) * pos @ s1
            h2 += (t.scale / 2) * pos @ s2
        if t.constant:
            h1 += (abs(t.constant) / (2 * grid.R)) * s1
            h2 += (t.constant / 2) * s2
    n_p_dim = 2 ** grid.n_p
    eta = np.arange(n_p_dim) - n_p_dim / 2
    # ancilla is the most significant register
    return np.kron(np.diag(eta).astype(np.complex128), h1) + np.kron(np.eye(n_p_dim), h2)


def check_hermitian(h: np.ndarray, tol: float = 1e-8) -> None:
    err = np.abs(h - h.conj().T).max() if h.size else 0.0
    if err > tol:
        raise ContractError(f"operator is not Hermitian (max deviation {err:.3g})")


def evolution_operator(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-iHt) for Hermitian H via eigendecomposition."""
    check_hermitian(h)
    if h.shape[0] > 2 ** MAX_DENSE_QUBITS:
        raise CapacityError("matrix too large for dense exponentiation")
    herm = (h + h.conj().T) / 2
    w, v = np.linalg.eigh(herm)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def exact_evolve(h: np.ndarray, t: float, state: QuantumState) -> QuantumState:
    if h.shape[0] != state.amplitudes.size:
        raise ShapeError("Hamiltonian and state dimensions differ")
    return QuantumState(evolution_operator(h, t) @ state.amplitudes, state.layout)


def upwind_matrix(n_points: int, v: float) -> np.ndarray:
    """First-order upwind generator L with du/dt = L u (periodic, h = 1)."""
    eye = np.eye(n_points)
    fwd = np.roll(eye, 1, axis=1)   # (fwd u)_j = u_{j+1}
    back = np.roll(eye, -1, axis=1)  # (back u)_j = u_{j-1}
    if v >= 0:
        return -v * (eye - back)
    return -v * (fwd - eye)


def central_diffusion_matrix(n_points: int, D: float) -> np.ndarray:
    eye = np.eye(n_points)
    return D * (np.roll(eye, 1, axis=1) + np.roll(eye, -1, axis=1) - 2 * eye)
