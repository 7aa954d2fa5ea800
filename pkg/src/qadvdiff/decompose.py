"""Lowering to {one-qubit, CNOT} and gate counting.

Multi-controlled gates are expanded without clean ancillas:

* C^k RZ: two halves of the controls toggle the target in turn around
  RZ(±θ/4), so the rotation survives only when both halves fire.
* C^k X (k >= 3): linear Toffoli ladder borrowing idle wires as dirty
  ancillas; with too few idle wires it falls back to H·C^kZ·H via C^k RZ.
* Toffoli: the standard 6-CNOT network with T gates as P(±π/4).

Bodies tagged with ``metadata["conj"] = m`` (first and last ``m`` gates are
mutual inverses, as in W_j) only get controls on their core.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ContractError
from .gates import Circuit, Gate, cx, gphase, h, phase, rz, x

ONE_QUBIT = ("X", "H", "RZ", "P")


@dataclass(frozen=True)
class GateReport:
    one_qubit_count: int
    cnot_count: int
    depth: int

    def as_dict(self) -> dict[str, int]:
        return {"one_qubit_count": self.one_qubit_count, "cnot_count": self.cnot_count,
                "depth": self.depth}


class _Emitter:
    def __init__(self, n_qubits: int):
        self.n = n_qubits
        self.out: list[Gate] = []

    # structural walk -----------------------------------------------------

    def circuit(self, c: Circuit, controls: tuple) -> None:
        for g in c.gates:
            self.gate(g, controls)

    def gate(self, g: Gate, controls: tuple) -> None:
        if g.name != "SUB":
            self.primitive(g, controls)
            return
        ctrl = controls + g.controls
        m = g.body.metadata.get("conj", 0) if ctrl else 0
        gates = g.body.gates
        if m and 2 * m <= len(gates):
            for pre in gates[:m]:
                self.gate(pre, ())
            for core in gates[m:len(gates) - m]:
                self.gate(core, ctrl)
            for post in gates[len(gates) - m:]:
                self.gate(post, ())
        else:
            self.circuit(g.body, ctrl)

    def primitive(self, g: Gate, controls: tuple) -> None:
        neg = [q for q, pol in controls if pol == 0]
        for q in neg:
            self.out.append(x(q))
        self.positive(g, [q for q, _ in controls])
        for q in neg:
            self.out.append(x(q))

    # positive-control expansions -----------------------------------------

    def positive(self, g: Gate, ctrl: list[int]) -> None:
        if not ctrl:
            self.out.append(g)
            return
        name = g.name
        if name == "GPH":
            self.positive(phase(ctrl[-1], g.param), ctrl[:-1])
        elif name == "P":
            self.mcrz(ctrl, g.targets[0], g.param)
            self.positive(gphase(g.param / 2), ctrl)
        elif name == "RZ":
            self.mcrz(ctrl, g.targets[0], g.param)
        elif name == "X":
            self.mcx(ctrl, g.targets[0])
        elif name == "CX":
            self.mcx(ctrl + [g.targets[0]], g.targets[1])
        elif name == "H":
            t = g.targets[0]
            self.ry(t, -math.pi / 4)
            self.mcz(ctrl, t)
            self.ry(t, math.pi / 4)
        else:  # pragma: no cover - Gate validates names
            raise ContractError(f"cannot decompose {name}")

    def ry(self, t: int, angle: float) -> None:
        self.out += [phase(t, -math.pi / 2), h(t), rz(t, angle), h(t), phase(t, math.pi / 2)]

    def mcz(self, ctrl: list[int], t: int) -> None:
        self.out.append(h(t))
        self.mcx(ctrl, t)
        self.out.append(h(t))

    def mcrz(self, ctrl: list[int], t: int, theta: float) -> None:
        if len(ctrl) == 1:
            c = ctrl[0]
            self.out += [rz(t, theta / 2), cx(c, t), rz(t, -theta / 2), cx(c, t)]
            return
        half = (len(ctrl) + 1) // 2
        g1, g2 = ctrl[:half], ctrl[half:]
        a = theta / 4
        for grp, sign in ((g2, -1), (g1, 1), (g2, -1), (g1, 1)):
            self.mcx(grp, t)
            self.out.append(rz(t, sign * a))

    def mcx(self, ctrl: list[int], t: int) -> None:
        k = len(ctrl)
        if k == 1:
            self.out.append(cx(ctrl[0], t))
            return
        if k == 2:
            self.toffoli(ctrl[0], ctrl[1], t)
            return
        busy = set(ctrl) | {t}
        idle = [q for q in range(self.n) if q not in busy]
        if len(idle) >= k - 2:
            self.ladder(ctrl, idle[:k - 2], t)
            return
        # C^k X = H · C^k Z · H with C^k Z = C^k RZ(π) · C^{k-1} P(π/2)
        self.out.append(h(t))
        self.mcrz(ctrl, t, math.pi)
        self.positive(phase(ctrl[-1], math.pi / 2), ctrl[:-1])
        self.out.append(h(t))

    def ladder(self, c: list[int], a: list[int], t: int) -> None:
        m = len(c)

        def sweep(with_target: bool) -> None:
            if with_target:
                self.toffoli(c[m - 1], a[m - 3], t)
            for i in range(m - 2, 1, -1):
                self.toffoli(c[i], a[i - 2], a[i - 1])
            self.toffoli(c[0], c[1], a[0])
            for i in range(2, m - 1):
                self.toffoli(c[i], a[i - 2], a[i - 1])
            if with_target:
                self.toffoli(c[m - 1], a[m - 3], t)

        sweep(True)
        sweep(False)

    def toffoli(self, a: int, b: int, t: int) -> None:
        tq, tdg = math.pi / 4, -math.pi / 4
        self.out += [
            h(t), cx(b, t), phase(t, tdg), cx(a, t), phase(t, tq), cx(b, t), phase(t, tdg),
            cx(a, t), phase(b, tq), phase(t, tq), h(t), cx(a, b), phase(a, tq), phase(b, tdg),
            cx(a, b),
        ]


def decompose(circuit: Circuit) -> Circuit:
    """Equivalent circuit over X, H, RZ, P, CNOT and a bare global phase."""
    em = _Emitter(circuit.n_qubits)
    em.circuit(circuit, ())
    meta = dict(circuit.metadata)
    meta["decomposed"] = True
    return Circuit(circuit.n_qubits, tuple(em.out), meta)


def gate_report(circuit: Circuit) -> GateReport:
    """Exact counts over a decomposed circuit; global phases are free."""
    ones = cnots = 0
    level = [0] * circuit.n_qubits
    for g in circuit.gates:
        if g.name == "SUB":
            raise ContractError("gate_report needs a decomposed circuit (found a controlled subcircuit)")
        if g.name == "GPH":
            continue
        if g.name == "CX":
            cnots += 1
        else:
            ones += 1
        qs = g.targets
        depth = max(level[q] for q in qs) + 1
        for q in qs:
            level[q] = depth
    return GateReport(ones, cnots, max(level, default=0))
