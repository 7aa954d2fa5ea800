"""State vectors over (system ⊗ ancilla) registers and the gate execution engine.

Bit convention: qubit ``q`` is bit ``q`` of the flat amplitude index.  Axis
registers are contiguous and ordered x, y, z from qubit 0; inside a register the
lowest qubit is the least significant bit of the grid coordinate.  The ancilla
register occupies the top qubits, so the flat index is
``x + Nx*y + Nx*Ny*z + Nsys*k`` and ``amplitudes.reshape(Np, Nz, Ny, Nx)``
exposes the natural tensor view.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import CapacityError, DegenerateProjectionError, ShapeError

DEFAULT_MAX_QUBITS = 26
MAX_QUBITS_ENV = "QADVDIFF_MAX_QUBITS"


def max_qubits() -> int:
    """Memory cap on register size; overridable through ``QADVDIFF_MAX_QUBITS``."""
    raw = os.environ.get(MAX_QUBITS_ENV)
    return int(raw) if raw else DEFAULT_MAX_QUBITS


def check_capacity(n_qubits: int, cap: int | None = None) -> None:
    cap = max_qubits() if cap is None else cap
    if n_qubits > cap:
        raise CapacityError(
            f"{n_qubits} qubits exceeds the {cap}-qubit cap "
            f"({16 * 2**n_qubits / 2**30:.3g} GiB of amplitudes)"
        )


# --------------------------------------------------------------------------
# register layout


@dataclass(frozen=True)
class RegisterLayout:
    """Named axis registers followed by the ancilla register."""

    axis_registers: tuple[tuple[str, range], ...]
    ancilla_register: range

    def __post_init__(self):
        covered = sorted(q for _, r in self.axis_registers for q in r)
        covered += list(self.ancilla_register)
        if sorted(covered) != list(range(len(covered))):
            raise ShapeError("register ranges must be disjoint and cover [0, n_qubits)")
        labels = [a for a, _ in self.axis_registers]
        if len(set(labels)) != len(labels):
            raise ShapeError(f"duplicate axis labels {labels}")

    @classmethod
    def build(cls, axes: Sequence[tuple[str, int]], n_ancilla: int = 0) -> "RegisterLayout":
        regs, start = [], 0
        for label, n in axes:
            if n < 1:
                raise ShapeError(f"axis {label!r} needs at least one qubit")
            regs.append((label, range(start, start + n)))
            start += n
        return cls(tuple(regs), range(start, start + n_ancilla))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.axis_registers)

    @property
    def n_system(self) -> int:
        return sum(len(r) for _, r in self.axis_registers)

    @property
    def n_ancilla(self) -> int:
        return len(self.ancilla_register)

    @property
    def n_qubits(self) -> int:
        return self.n_system + self.n_ancilla

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(2 ** len(r) for _, r in self.axis_registers)

    def register(self, label: str) -> range:
        for a, r in self.axis_registers:
            if a == label:
                return r
        raise KeyError(f"no axis register {label!r}")

    def field_to_vector(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        if values.shape != self.shape:
            raise ShapeError(f"field shape {values.shape} does not match layout {self.shape}")
        return values.T.ravel()

    def vector_to_field(self, vec: np.ndarray) -> np.ndarray:
        return np.asarray(vec).reshape(self.shape[::-1]).T


# --------------------------------------------------------------------------
# execution primitives


def _bits(mask: int) -> np.ndarray:
    return np.array([q for q in range(mask.bit_length()) if mask >> q & 1], dtype=np.int64)


def _n_bits(psi: np.ndarray) -> int:
    return psi.size.bit_length() - 1


def _remap_bits(word: int, mapping: Mapping[int, int]) -> int:
    out = 0
    for q in range(word.bit_length()):
        if word >> q & 1:
            out |= 1 << mapping.get(q, q)
    return out


def _control_bits(controls: Iterable[tuple[int, int]]) -> tuple[int, int]:
    mask = value = 0
    for q, pol in controls:
        mask |= 1 << q
        value |= (pol & 1) << q
    return mask, value


@dataclass(frozen=True, eq=False)
class PairOp:
    """2x2 matrix on index pairs (i, i ^ flip) for every i with ``i & mask == value``.

    ``mask`` includes the flip bits; ``value`` holds the low member of each pair.
    """

    mask: int
    value: int
    flip: int
    matrix: np.ndarray
    positions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=np.complex128))
        object.__setattr__(self, "positions", _bits(self.mask))

    def apply(self, psi: np.ndarray) -> None:
        m = self.matrix
        _kernels.pair_kernel(psi, _n_bits(psi) - self.positions.size, self.positions, self.value, self.flip,
                             m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def controlled(self, controls) -> "PairOp":
        cm, cv = _control_bits(controls)
        return PairOp(self.mask | cm, self.value | cv, self.flip, self.matrix)

    def inverse(self) -> "PairOp":
        return PairOp(self.mask, self.value, self.flip, self.matrix.conj().T)

    def remap(self, mapping) -> "PairOp":
        return PairOp(_remap_bits(self.mask, mapping), _remap_bits(self.value, mapping),
                      _remap_bits(self.flip, mapping), self.matrix)

    def max_qubit(self) -> int:
        return self.mask.bit_length() - 1


@dataclass(frozen=True, eq=False)
class PhaseOp:
    """Multiply amplitudes with ``i & mask == value`` by ``phase``."""

    mask: int
    value: int
    phase: complex
    positions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "positions", _bits(self.mask))

    def apply(self, psi: np.ndarray) -> None:
        if self.mask == 0:
            psi *= self.phase
        else:
            _kernels.phase_kernel(psi, _n_bits(psi) - self.positions.size, self.positions, self.value, complex(self.phase))

    def controlled(self, controls) -> "PhaseOp":
        cm, cv = _control_bits(controls)
        return PhaseOp(self.mask | cm, self.value | cv, self.phase)

    def inverse(self) -> "PhaseOp":
        return PhaseOp(self.mask, self.value, np.conj(self.phase))

    def remap(self, mapping) -> "PhaseOp":
        return PhaseOp(_remap_bits(self.mask, mapping), _remap_bits(self.value, mapping), self.phase)

    def max_qubit(self) -> int:
        return self.mask.bit_length() - 1


@dataclass(frozen=True, eq=False)
class BlockOp:
    """Dense matrices on a contiguous qubit range, chosen by selector bits.

    ``mats[s]`` is applied where the selector qubits (bit t of ``s`` read from
    ``selectors[t]``) spell ``s``.
    """

    act_start: int
    n_act: int
    selectors: tuple[int, ...]
    mats: np.ndarray

    def __post_init__(self):
        mats = np.ascontiguousarray(self.mats, dtype=np.complex128)
        dim = 2 ** self.n_act
        if mats.shape != (2 ** len(self.selectors), dim, dim):
            raise ShapeError(f"block matrices have shape {mats.shape}")
        act = range(self.act_start, self.act_start + self.n_act)
        if any(s in act for s in self.selectors):
            raise ShapeError("selector qubits overlap the acted-on range")
        object.__setattr__(self, "mats", mats)

    def apply(self, psi: np.ndarray) -> None:
        _kernels.block_kernel(psi, _n_bits(psi), self.act_start, self.n_act,
                              np.array(self.selectors, dtype=np.int64), self.mats)

    def controlled(self, controls) -> "BlockOp":
        controls = list(controls)
        sel = self.selectors + tuple(q for q, _ in controls)
        n_old = len(self.selectors)
        eye = np.eye(2 ** self.n_act, dtype=np.complex128)
        mats = np.empty((2 ** len(sel),) + eye.shape, dtype=np.complex128)
        want = sum((pol & 1) << t for t, (_, pol) in enumerate(controls))
        for s in range(mats.shape[0]):
            fires = (s >> n_old) == want
            mats[s] = self.mats[s & ((1 << n_old) - 1)] if fires else eye
        return BlockOp(self.act_start, self.n_act, sel, mats)

    def inverse(self) -> "BlockOp":
        return BlockOp(self.act_start, self.n_act, self.selectors,
                       np.conj(np.swapaxes(self.mats, 1, 2)))

    def remap(self, mapping) -> "BlockOp":
        start = mapping.get(self.act_start, self.act_start)
        for q in range(self.act_start, self.act_start + self.n_act):
            if mapping.get(q, q) != start + q - self.act_start:
                raise ShapeError("remap must keep the acted-on range contiguous and ordered")
        return BlockOp(start, self.n_act, tuple(mapping.get(s, s) for s in self.selectors), self.mats)

    def max_qubit(self) -> int:
        return max((self.act_start + self.n_act - 1,) + self.selectors)


KernelOp = PairOp | PhaseOp | BlockOp


def apply_ops(psi: np.ndarray, ops: Iterable[KernelOp]) -> None:
    for op in ops:
        op.apply(psi)


# --------------------------------------------------------------------------
# states


@dataclass(eq=False)
class QuantumState:
    """Amplitude vector plus (optional) register layout.  Mutated in place by gates."""

    amplitudes: np.ndarray
    layout: RegisterLayout | None = None

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        n = int(np.log2(max(amps.size, 1)))
        if amps.ndim != 1 or amps.size != 2 ** n or amps.size < 2:
            raise ShapeError(f"amplitude vector length {amps.size} is not 2^n with n >= 1")
        if self.layout is not None and self.layout.n_qubits != n:
            raise ShapeError("layout qubit count does not match amplitude vector")
        self.amplitudes = amps

    @property
    def n_qubits(self) -> int:
        return int(np.log2(self.amplitudes.size))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "QuantumState":
        return QuantumState(self.amplitudes.copy(), self.layout)

    def blocks(self) -> np.ndarray:
        """View with shape (N_p, N_sys): row k is the system block with ancilla = k."""
        if self.layout is None:
            raise ShapeError("state has no register layout")
        return self.amplitudes.reshape(2 ** self.layout.n_ancilla, 2 ** self.layout.n_system)


def zero_state(n_qubits: int, cap: int | None = None, layout: RegisterLayout | None = None) -> QuantumState:
    if n_qubits < 1:
        raise ShapeError("need at least one qubit")
    check_capacity(n_qubits, cap)
    amps = np.zeros(2 ** n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return QuantumState(amps, layout)


def _normalized(v: np.ndarray, what: str) -> np.ndarray:
    nrm = np.linalg.norm(v)
    if nrm == 0 or not np.isfinite(nrm):
        raise ShapeError(f"{what} must be finite and nonzero")
    return v / nrm


def load_product_state(values: np.ndarray, ancilla_amps: Sequence[complex], layout: RegisterLayout,
                       cap: int | None = None) -> QuantumState:
    """normalize(field) ⊗ normalize(ancilla) in the layout's index map."""
    check_capacity(layout.n_qubits, cap)
    sys_vec = _normalized(layout.field_to_vector(np.asarray(values, dtype=np.complex128)), "field")
    anc = np.asarray(ancilla_amps, dtype=np.complex128).ravel()
    if anc.size != 2 ** layout.n_ancilla:
        raise ShapeError(f"ancilla vector has {anc.size} entries, expected {2 ** layout.n_ancilla}")
    anc = _normalized(anc, "ancilla amplitudes")
    amps = np.multiply.outer(anc, sys_vec).ravel()
    if amps.size == 1:
        # a bare one-point system with no ancilla is not a qubit register
        raise ShapeError("state needs at least one qubit")
    return QuantumState(amps, layout)


def _check_indices(gate, n_qubits: int) -> None:
    qubits = list(gate.qubits())
    if any(q < 0 or q >= n_qubits for q in qubits):
        raise IndexError(f"gate {gate.name} touches qubits {qubits} outside [0, {n_qubits})")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"gate {gate.name} has repeated qubits {qubits}")


def apply_gate(state: QuantumState, gate) -> QuantumState:
    _check_indices(gate, state.n_qubits)
    apply_ops(state.amplitudes, gate.kernel_ops())
    return state


def apply_circuit(state: QuantumState, circuit, fused: bool = True) -> QuantumState:
    """Run ``circuit`` on ``state`` in place.

    ``fused`` lets blocks that carry a precomputed kernel use it instead of
    walking their gate list; both paths give the same unitary.
    """
    if circuit.n_qubits > state.n_qubits:
        raise ShapeError(f"circuit needs {circuit.n_qubits} qubits, state has {state.n_qubits}")
    apply_ops(state.amplitudes, circuit.kernel_ops(fused=fused))
    return state


def extract_field(state: QuantumState, ancilla_index: int) -> tuple[np.ndarray, float]:
    """System block at a fixed ancilla value, renormalized, plus its squared weight."""
    if state.layout is None:
        raise ShapeError("state has no register layout")
    blocks = state.blocks()
    if not 0 <= ancilla_index < blocks.shape[0]:
        raise IndexError(f"ancilla index {ancilla_index} out of range")
    block = blocks[ancilla_index]
    weight = float(np.vdot(block, block).real)
    if weight < 1e-15:
        raise DegenerateProjectionError(f"projection weight {weight:.3g} is below 1e-15")
    return state.layout.vector_to_field(block / np.sqrt(weight)), weight


def sample_counts(state: QuantumState, shots: int, seed: int,
                  qubits: Sequence[int] | None = None) -> dict[str, int]:
    """Multinomial measurement record.

    Bitstrings list the measured qubits from highest to lowest index, so for a
    full-register measurement the string is the binary flat index.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    probs = np.abs(state.amplitudes) ** 2
    n = state.n_qubits
    if qubits is None:
        qubits = list(range(n))
    else:
        qubits = sorted(qubits)
        keep = list(qubits)
        drop = tuple(n - 1 - q for q in range(n) if q not in keep)
        probs = probs.reshape((2,) * n).sum(axis=drop).ravel() if drop else probs
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs)
    width = len(qubits)
    return {format(int(i), f"0{width}b"): int(counts[i]) for i in np.flatnonzero(counts)}


def dump_csv(state: QuantumState, path) -> None:
    with open(path, "w") as fh:
        fh.write("index,re,im\n")
        for i, a in enumerate(state.amplitudes):
            fh.write(f"{i},{a.real:.17g},{a.imag:.17g}\n")
