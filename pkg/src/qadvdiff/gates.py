"""Gate IR and circuit synthesis.

The IR has six primitive kinds (X, H, RZ, P, GPH, CX) plus ``SUB``, a
multi-controlled subcircuit.  Synthesised blocks additionally carry a fused
kernel (a short list of :mod:`statevec` ops with the same unitary) that the
executor uses instead of walking the gate list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, ShapeError
from .statevec import BlockOp, KernelOp, PairOp, PhaseOp

PRIMITIVES = ("X", "H", "RZ", "P", "GPH", "CX")
MATRIX_CAP = 12

_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def phase_matrix(lam: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * lam)]).astype(np.complex128)


@dataclass(frozen=True, eq=False)
class Gate:
    name: str
    targets: tuple[int, ...] = ()
    param: float = 0.0
    controls: tuple[tuple[int, int], ...] = ()
    body: "Circuit | None" = None

    def __post_init__(self):
        if self.name not in PRIMITIVES + ("SUB",):
            raise ValueError(f"unknown gate kind {self.name!r}")
        if not math.isfinite(self.param):
            raise ValueError(f"{self.name} parameter must be finite")
        if self.name == "SUB":
            if self.body is None:
                raise ValueError("SUB gate needs a body")
            ctrl = {q for q, _ in self.controls}
            if ctrl & set(self.body.qubits()):
                raise ValueError("SUB controls overlap its body")
            if any(pol not in (0, 1) for _, pol in self.controls):
                raise ValueError("control polarity must be 0 or 1")

    # structure -----------------------------------------------------------

    def qubits(self) -> tuple[int, ...]:
        if self.name == "SUB":
            return tuple(q for q, _ in self.controls) + tuple(sorted(self.body.qubits()))
        return self.targets

    def matrix(self) -> np.ndarray:
        """2x2 matrix of a one-qubit primitive."""
        if self.name == "X":
            return _X
        if self.name == "H":
            return _H
        if self.name == "RZ":
            return rz_matrix(self.param)
        if self.name == "P":
            return phase_matrix(self.param)
        raise ValueError(f"{self.name} has no single-qubit matrix")

    def inverse(self) -> "Gate":
        if self.name in ("X", "H", "CX"):
            return self
        if self.name == "SUB":
            return replace(self, body=self.body.inverse())
        return replace(self, param=-self.param)

    def remap(self, mapping: Mapping[int, int]) -> "Gate":
        if self.name == "SUB":
            return Gate("SUB", controls=tuple((mapping.get(q, q), p) for q, p in self.controls),
                        body=self.body.remap(mapping))
        return replace(self, targets=tuple(mapping.get(q, q) for q in self.targets))

    def kernel_ops(self, controls: Sequence[tuple[int, int]] = (), fused: bool = True) -> list[KernelOp]:
        controls = tuple(controls)
        if self.name == "SUB":
            return self.body.kernel_ops(fused=fused, controls=controls + self.controls)
        if self.name == "GPH":
            return [PhaseOp(0, 0, np.exp(1j * self.param)).controlled(controls)]
        if self.name == "CX":
            c, t = self.targets
            return [PairOp(1 << t, 0, 1 << t, _X).controlled(controls + ((c, 1),))]
        (t,) = self.targets
        if self.name == "P":
            return [PhaseOp(1 << t, 1 << t, np.exp(1j * self.param)).controlled(controls)]
        return [PairOp(1 << t, 0, 1 << t, self.matrix()).controlled(controls)]


def x(q: int) -> Gate:
    return Gate("X", (q,))


def h(q: int) -> Gate:
    return Gate("H", (q,))


def rz(q: int, theta: float) -> Gate:
    return Gate("RZ", (q,), float(theta))


def phase(q: int, lam: float) -> Gate:
    return Gate("P", (q,), float(lam))


def gphase(phi: float) -> Gate:
    return Gate("GPH", (), float(phi))


def cx(control: int, target: int) -> Gate:
    return Gate("CX", (control, target))


def controlled(body: "Circuit", controls: Iterable[tuple[int, int]]) -> Gate:
    return Gate("SUB", controls=tuple((int(q), int(p)) for q, p in controls), body=body)


@dataclass(frozen=True, eq=False)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    metadata: Mapping = field(default_factory=dict)
    kernel: tuple[KernelOp, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.kernel is not None:
            object.__setattr__(self, "kernel", tuple(self.kernel))
        for g in self.gates:
            if any(q >= self.n_qubits or q < 0 for q in g.qubits()):
                raise ShapeError(f"gate {g.name} on {g.qubits()} outside a {self.n_qubits}-qubit circuit")

    def __len__(self) -> int:
        return len(self.gates)

    def qubits(self) -> set[int]:
        out: set[int] = set()
        for g in self.gates:
            out.update(g.qubits())
        return out

    def kernel_ops(self, fused: bool = True, controls: Sequence[tuple[int, int]] = ()) -> list[KernelOp]:
        if fused and self.kernel is not None:
            return [op.controlled(controls) for op in self.kernel] if controls else list(self.kernel)
        ops: list[KernelOp] = []
        for g in self.gates:
            ops.extend(g.kernel_ops(controls, fused))
        return ops

    def inverse(self) -> "Circuit":
        kernel = None
        if self.kernel is not None:
            kernel = tuple(op.inverse() for op in reversed(self.kernel))
        meta = dict(self.metadata)
        meta["inverse"] = not meta.get("inverse", False)
        return Circuit(self.n_qubits, tuple(g.inverse() for g in reversed(self.gates)), meta, kernel)

    def remap(self, mapping: Mapping[int, int], n_qubits: int | None = None) -> "Circuit":
        n = n_qubits if n_qubits is not None else max([self.n_qubits] + [v + 1 for v in mapping.values()])
        kernel = None if self.kernel is None else tuple(op.remap(mapping) for op in self.kernel)
        return Circuit(n, tuple(g.remap(mapping) for g in self.gates), dict(self.metadata), kernel)

    def embed(self, qubits: Sequence[int], n_qubits: int) -> "Circuit":
        """Place local qubit i on ``qubits[i]`` of an ``n_qubits`` register."""
        if len(qubits) < self.n_qubits:
            raise ShapeError("not enough target qubits to embed circuit")
        return self.remap({i: q for i, q in enumerate(qubits)}, n_qubits)

    def widen(self, n_qubits: int) -> "Circuit":
        if n_qubits < self.n_qubits:
            raise ShapeError("cannot shrink a circuit")
        return replace(self, n_qubits=n_qubits)

    def repeat(self, times: int) -> "Circuit":
        kernel = None if self.kernel is None else self.kernel * times
        meta = dict(self.metadata)
        meta["repeat"] = times * meta.get("repeat", 1)
        return Circuit(self.n_qubits, self.gates * times, meta, kernel)

    def flat_size(self) -> int:
        return sum(g.body.flat_size() if g.name == "SUB" else 1 for g in self.gates)


def compose(*circuits: Circuit, n_qubits: int | None = None, metadata: Mapping | None = None) -> Circuit:
    """Sequential composition; a fused kernel survives only if every part has one."""
    n = max([c.n_qubits for c in circuits] + [n_qubits or 0])
    gates = tuple(g for c in circuits for g in c.gates)
    kernel = None
    if circuits and all(c.kernel is not None for c in circuits):
        kernel = tuple(op for c in circuits for op in c.kernel)
    return Circuit(n, gates, dict(metadata or {}), kernel)


def as_block(circuits: Iterable[Circuit], n_qubits: int, metadata: Mapping | None = None) -> Circuit:
    """Group circuits as uncontrolled SUB gates, keeping each one's structure."""
    gates = tuple(controlled(c.widen(n_qubits), ()) for c in circuits)
    return Circuit(n_qubits, gates, dict(metadata or {}))


# --------------------------------------------------------------------------
# transport primitives


def _pair_matrix(gamma_tau: float, lam: float) -> np.ndarray:
    """P(-λ) H RZ(-2γτ) H P(λ) as a matrix product."""
    return phase_matrix(-lam) @ _H @ rz_matrix(-2 * gamma_tau) @ _H @ phase_matrix(lam)


def w_j(n_alpha: int, j: int, gamma_tau: float, lam: float, x_bit: int) -> Circuit:
    """CNOT fan, X^x, P, H, multi-controlled RZ(-2γτ), then everything undone.

    W_j acts on local qubits 0..j-1; its target is qubit ``j - 1``.
    """
    if not 1 <= j <= n_alpha:
        raise ValueError(f"W_j needs 1 <= j <= {n_alpha}, got {j}")
    if x_bit not in (0, 1):
        raise ValueError("x must be 0 or 1")
    t = j - 1
    low = list(range(t))
    fan = [cx(t, i) for i in low]
    flips = [x(i) for i in low] if x_bit else []
    pre = fan + flips + [phase(t, lam), h(t)]
    core_rz = rz(t, -2 * gamma_tau)
    core = controlled(Circuit(n_alpha, (core_rz,)), [(i, 1) for i in low]) if low else core_rz
    post = [g.inverse() for g in reversed(pre)]

    mask = (1 << j) - 1
    lo = 0 if x_bit else (1 << t) - 1
    kernel = (PairOp(mask, lo, mask, _pair_matrix(gamma_tau, lam)),)
    meta = {"kind": "W", "j": j, "x": x_bit, "conj": len(pre)}
    return Circuit(n_alpha, tuple(pre + [core] + post), meta, kernel)


def _edge_block(n_alpha: int, gamma_tau: float, lam: float, with_phase: bool, kind: str) -> Circuit:
    # the W_j product realises exp(+iγτS); feed -γτ so the block is exp(-iγτS)
    g = -gamma_tau
    ws = [w_j(n_alpha, j, g, lam, 0) for j in range(1, n_alpha + 1)]
    tail = w_j(n_alpha, n_alpha, g, -lam, 1)
    gates = [controlled(w, ()) for w in ws]
    kernel = [op for w in ws for op in w.kernel]
    if with_phase:
        gates.append(gphase(-2 * g))
        kernel.append(PhaseOp(0, 0, np.exp(-2j * g)))
    gates.append(controlled(tail, ()))
    kernel.extend(tail.kernel)
    return Circuit(n_alpha, tuple(gates), {"kind": kind, "gamma_tau": gamma_tau}, tuple(kernel))


def v1_block(n_alpha: int, gamma1_tau: float) -> Circuit:
    """Upwind-dissipative factor ≈ exp(-iγ₁τ S1)."""
    if n_alpha < 1:
        raise ValueError("n_alpha must be >= 1")
    return _edge_block(n_alpha, gamma1_tau, 0.0, True, "V1")


def v2_block(n_alpha: int, gamma2_tau: float) -> Circuit:
    """Skew (transport) factor ≈ exp(-iγ₂τ S2)."""
    if n_alpha < 1:
        raise ValueError("n_alpha must be >= 1")
    return _edge_block(n_alpha, gamma2_tau, -np.pi / 2, False, "V2")


def vd_block(n_alpha: int, gammaD_tau: float) -> Circuit:
    """Diffusion factor ≈ exp(-iγ_Dτ S_D); same synthesis as :func:`v1_block`."""
    if n_alpha < 1:
        raise ValueError("n_alpha must be >= 1")
    return _edge_block(n_alpha, gammaD_tau, 0.0, True, "VD")


def controlled_power_block(base: Callable[[float], Circuit], n_p: int, tau: float,
                           ancilla: Sequence[int] | None = None,
                           n_qubits: int | None = None) -> Circuit:
    """Σ_k V(τ)^{k - N_p/2} ⊗ |k><k| on (system ⊗ ancilla).

    Ancilla bit m controls V(τ) applied 2^m times; an uncontrolled
    V(τ)^{-1} applied 2^{n_p-1} times shifts the exponent range to start at
    -N_p/2.  ``ancilla`` defaults to the qubits just above the base circuit.
    """
    if n_p < 1:
        raise ValueError("n_p must be >= 1")
    v = base(tau)
    if ancilla is None:
        ancilla = list(range(v.n_qubits, v.n_qubits + n_p))
    if len(ancilla) != n_p:
        raise ShapeError(f"expected {n_p} ancilla qubits, got {len(ancilla)}")
    n = n_qubits if n_qubits is not None else max(v.n_qubits, max(ancilla) + 1)
    v = v.widen(n)
    gates = [controlled(v.repeat(2 ** m), [(ancilla[m], 1)]) for m in range(n_p)]
    gates.append(controlled(v.inverse().repeat(2 ** (n_p - 1)), ()))
    return Circuit(n, tuple(gates), {"kind": "controlled-power", "n_p": n_p,
                                      "base": v.metadata.get("kind")})


def qft(n_p: int, inverse: bool = False) -> Circuit:
    """F[j, k] = ω^{jk}/√N with ω = e^{2πi/N}; qubit 0 is the least significant bit."""
    if n_p < 1:
        raise ValueError("n_p must be >= 1")
    gates: list[Gate] = []
    for i in reversed(range(n_p)):
        gates.append(h(i))
        for low in reversed(range(i)):
            lam = np.pi / 2 ** (i - low)
            gates.append(controlled(Circuit(n_p, (phase(i, lam),)), [(low, 1)]))
    for i in range(n_p // 2):
        a, b = i, n_p - 1 - i
        gates += [cx(a, b), cx(b, a), cx(a, b)]
    circ = Circuit(n_p, tuple(gates), {"kind": "QFT"})
    return circ.inverse() if inverse else circ


# --------------------------------------------------------------------------
# dense oracle


def _flatten(circuit: Circuit, controls: tuple = ()) -> Iterable[tuple[Gate, tuple]]:
    for g in circuit.gates:
        if g.name == "SUB":
            yield from _flatten(g.body, controls + g.controls)
        else:
            yield g, controls


def flatten(circuit: Circuit) -> list[tuple[Gate, tuple[tuple[int, int], ...]]]:
    """Primitive gates with their accumulated control lists, in order."""
    return list(_flatten(circuit))


def _embed_1q(m: np.ndarray, t: int, n: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(2 ** (n - t - 1)), m), np.eye(2 ** t))


def _control_projector(controls, n: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    hit = np.ones(2 ** n, dtype=bool)
    for q, pol in controls:
        hit &= ((idx >> q) & 1) == pol
    return hit.astype(np.complex128)


def gate_matrix(g: Gate, controls, n: int) -> np.ndarray:
    eye = np.eye(2 ** n, dtype=np.complex128)
    if g.name == "GPH":
        base = np.exp(1j * g.param) * eye
    elif g.name == "CX":
        c, t = g.targets
        controls = tuple(controls) + ((c, 1),)
        base = _embed_1q(_X, t, n)
    else:
        base = _embed_1q(g.matrix(), g.targets[0], n)
    if not controls:
        return base
    return eye + _control_projector(controls, n)[:, None] * (base - eye)


def circuit_to_matrix(circuit: Circuit) -> np.ndarray:
    """Left-multiply the dense matrix of every primitive, in order."""
    n = circuit.n_qubits
    if n > MATRIX_CAP:
        raise CapacityError(f"dense matrices are capped at {MATRIX_CAP} qubits, got {n}")
    u = np.eye(2 ** n, dtype=np.complex128)
    for g, ctrl in flatten(circuit):
        u = gate_matrix(g, ctrl, n) @ u
    return u


# --------------------------------------------------------------------------
# block fusion


def fuse_blocks(circuit: Circuit, act: Sequence[int], selectors: Sequence[int],
                max_work_qubits: int = 22) -> Circuit:
    """Attach a single :class:`BlockOp` kernel equal to ``circuit``.

    Valid when the circuit only changes qubits in the contiguous range
    ``act`` and uses ``selectors`` purely as controls.  The per-selector
    matrices are obtained by running the circuit once on a register extended
    by a spectator copy of ``act`` prepared in Σ_j |j>|j>.
    """
    act = list(act)
    selectors = list(selectors)
    if act != list(range(act[0], act[0] + len(act))):
        raise ShapeError("acted-on qubits must be a contiguous ascending range")
    n_a, n_s = len(act), len(selectors)
    work = 2 * n_a + n_s
    if work > max_work_qubits:
        raise CapacityError(f"block fusion needs {work} work qubits (cap {max_work_qubits})")
    mapping = {q: i for i, q in enumerate(act)}
    mapping.update({q: n_a + i for i, q in enumerate(selectors)})
    allowed_flip = (1 << n_a) - 1
    ops = []
    for op in circuit.kernel_ops():
        touched = op.max_qubit()
        if isinstance(op, (PairOp, PhaseOp)):
            bits = [q for q in range(touched + 1) if op.mask >> q & 1]
            if any(q not in mapping for q in bits):
                raise ShapeError("circuit touches qubits outside act ∪ selectors")
        local = op.remap(mapping)
        if isinstance(local, PairOp) and local.flip & ~allowed_flip:
            raise ShapeError("circuit flips a selector qubit")
        ops.append(local)
    dim = 2 ** n_a
    psi = np.zeros(2 ** work, dtype=np.complex128)
    view = psi.reshape(dim, 2 ** n_s, dim)
    for j in range(dim):
        view[j, :, j] = 1.0
    for op in ops:
        op.apply(psi)
    mats = np.ascontiguousarray(view.transpose(1, 2, 0))
    kernel = (BlockOp(act[0], n_a, tuple(selectors), mats),)
    meta = dict(circuit.metadata)
    meta["fused"] = True
    return Circuit(circuit.n_qubits, circuit.gates, meta, kernel)


# --------------------------------------------------------------------------
# text format


def _fmt(v: float) -> str:
    return repr(float(v))


def to_text(circuit: Circuit) -> str:
    """One primitive per line: ``NAME targets [c=q:pol,...] [param]``."""
    lines = [f"# qubits {circuit.n_qubits}"]
    for g, ctrl in flatten(circuit):
        parts = [g.name, ",".join(map(str, g.targets)) or "-"]
        if ctrl:
            parts.append("c=" + ",".join(f"{q}:{p}" for q, p in ctrl))
        if g.name in ("RZ", "P", "GPH"):
            parts.append(_fmt(g.param))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Circuit:
    n = None
    gates: list[Gate] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            bits = line[1:].split()
            if len(bits) == 2 and bits[0] == "qubits":
                n = int(bits[1])
            continue
        fields = line.split()
        name, tg = fields[0], fields[1]
        targets = () if tg == "-" else tuple(int(t) for t in tg.split(","))
        ctrl: tuple = ()
        param = 0.0
        for f in fields[2:]:
            if f.startswith("c="):
                ctrl = tuple(tuple(int(v) for v in c.split(":")) for c in f[2:].split(","))
            else:
                param = float(f)
        g = Gate(name, targets, param)
        gates.append(g)
        if ctrl:
            width = max(list(targets) + [q for q, _ in ctrl]) + 1
            gates[-1] = controlled(Circuit(width, (g,)), ctrl)
    if n is None:
        n = max((q + 1 for g in gates for q in g.qubits()), default=1)
    gates = [controlled(g.body.widen(n), g.controls) if g.name == "SUB" else g for g in gates]
    return Circuit(n, tuple(gates))
