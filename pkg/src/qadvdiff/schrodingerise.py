"""Warp register lifecycle: p-grid, ancilla preparation, basis change and recovery.

The ancilla starts as the sampled profile e^{-|p|} on p_j = -πR + j·2πR/N_p.
The transform to the η basis is the QFT followed by X on the ancilla's top
qubit; the X re-centres the frequencies so that register value k carries
η_k = k - N_p/2, matching the diagonal weights of the step Hamiltonian.
Recovery undoes the transform and projects on p = 0 (index N_p/2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateProjectionError
from .gates import Circuit, circuit_to_matrix, compose, qft, x
from .statevec import QuantumState, RegisterLayout, apply_circuit, extract_field, load_product_state


@dataclass(frozen=True)
class WarpSpec:
    R: float
    n_p: int

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("R must be positive")
        if self.n_p < 0:
            raise ValueError("n_p must be non-negative")

    @property
    def size(self) -> int:
        return 2 ** self.n_p

    @property
    def p_values(self) -> np.ndarray:
        n = self.size
        return -np.pi * self.R + np.arange(n) * 2 * np.pi * self.R / n

    @property
    def eta_values(self) -> np.ndarray:
        return np.arange(self.size) - self.size / 2

    @property
    def recovery_index(self) -> int:
        """Grid index of p = 0."""
        return self.size // 2 if self.n_p else 0

    @cached_property
    def transform(self) -> Circuit:
        """p basis → η basis on the local ancilla register."""
        if self.n_p == 0:
            return Circuit(1)
        shift = Circuit(self.n_p, (x(self.n_p - 1),))
        return compose(qft(self.n_p), shift, metadata={"kind": "warp-transform"})

    @cached_property
    def recovery_row(self) -> np.ndarray:
        """Row of the inverse transform that lands on p = 0."""
        if self.n_p == 0:
            return np.ones(1, dtype=np.complex128)
        return circuit_to_matrix(self.transform.inverse())[self.recovery_index]


def ancilla_init(warp: WarpSpec) -> np.ndarray:
    w = np.exp(-np.abs(warp.p_values)).astype(np.complex128)
    return w / np.linalg.norm(w)


def _on_ancilla(circ: Circuit, layout: RegisterLayout) -> Circuit:
    return circ.embed(list(layout.ancilla_register), layout.n_qubits)


def prepare(initial: np.ndarray, warp: WarpSpec, layout: RegisterLayout) -> QuantumState:
    """Load field ⊗ e^{-|p|} profile and move the ancilla into the η basis."""
    if layout.n_ancilla != warp.n_p:
        raise ValueError("layout ancilla width differs from the warp register")
    state = load_product_state(initial, ancilla_init(warp), layout)
    if warp.n_p:
        apply_circuit(state, _on_ancilla(warp.transform, layout))
    return state


def _projected_block(state: QuantumState, warp: WarpSpec) -> np.ndarray:
    # the inverse transform followed by the p=0 projection only mixes ancilla
    # blocks, so the projected block is one row of that (small) matrix
    return warp.recovery_row @ state.blocks()


def recover(state: QuantumState, warp: WarpSpec) -> tuple[np.ndarray, float]:
    """Field at p = 0 (unit ℓ₂, complex) and its squared weight ⟨Ô⟩."""
    block = _projected_block(state, warp)
    weight = float(np.vdot(block, block).real)
    if weight < 1e-15:
        raise DegenerateProjectionError(f"recovery weight {weight:.3g} is below 1e-15")
    scale = np.exp(warp.p_values[warp.recovery_index])  # e^{p*} = 1 at p* = 0
    field = state.layout.vector_to_field(block * scale)
    return field / np.linalg.norm(field), weight


def recover_by_circuit(state: QuantumState, warp: WarpSpec) -> tuple[np.ndarray, float]:
    """Same as :func:`recover`, but by running the inverse transform on a copy."""
    work = state.copy()
    if warp.n_p:
        apply_circuit(work, _on_ancilla(warp.transform.inverse(), state.layout))
    return extract_field(work, warp.recovery_index)


def energy(state: QuantumState, warp: WarpSpec) -> float:
    """⟨Ô⟩: probability of finding the ancilla at p = 0 after the inverse transform."""
    block = _projected_block(state, warp)
    return float(np.vdot(block, block).real)


def real_field(field: np.ndarray) -> np.ndarray:
    """Remove the global phase (total mass made real-positive), keep the real part, renormalize."""
    field = np.asarray(field)
    if not np.iscomplexobj(field):
        out = field.astype(float)
    else:
        mass = field.sum()
        rot = np.exp(-1j * np.angle(mass)) if abs(mass) > 0 else 1.0
        out = (field * rot).real
    nrm = np.linalg.norm(out)
    return out / nrm if nrm > 0 else out
