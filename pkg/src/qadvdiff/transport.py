"""Per-time-step circuit assembly and the emulated time evolution.

One step sweeps the axes x → y → z.  For each axis the factors are, in
application order:

1. diffusion: controlled-power block of V_D (γ_D = D/R);
2. upwind part of a linear field v = s·c: for every bit m of the controlling
   register, a controlled-power block of V1 at γ₁ = 2^m|s|/(2R), itself
   controlled on that bit (skipped with ``drop_cv1``, which keeps only the
   uncontrolled inverse powers);
3. skew part of the linear field: V2 at γ₂ = 2^m s/2, controlled on bit m;
4. constant offset c: controlled-power V1 at |c|/(2R), then V2 at c/2.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapacityError, ConfigError, ShapeError
from .gates import (Circuit, as_block, circuit_to_matrix, controlled, controlled_power_block, fuse_blocks,
                    v1_block, v2_block, vd_block)
from .grid import AxisTransport, GridSpec, TransportSpec
from .schrodingerise import WarpSpec, energy, prepare, real_field, recover
from .statevec import apply_ops, check_capacity

__all__ = [
    "AxisTransport", "GridSpec", "TransportSpec", "assemble_step", "cv1_identity_distance",
    "evolve", "evolve_state", "Evolution", "fuse_step",
]


def _power(block_fn, n: int, gamma: float, reg: Sequence[int], anc: Sequence[int], n_qubits: int,
           drop_controlled: bool = False) -> Circuit:
    """Controlled-power block of ``block_fn(n, gamma·τ)`` placed on ``reg``."""

    def base(tau: float) -> Circuit:
        return block_fn(n, gamma * tau).embed(list(reg), n_qubits)

    def build(tau: float) -> Circuit:
        cpb = controlled_power_block(base, len(anc), tau, ancilla=list(anc), n_qubits=n_qubits)
        if drop_controlled:
            # keep the uncontrolled V^{-N_p/2} only
            return Circuit(n_qubits, cpb.gates[-1:], dict(cpb.metadata, dropped="controlled"))
        return cpb

    return build


def _axis_factors(grid: GridSpec, label: str, t: AxisTransport, D: float, dt: float,
                  drop_cv1: bool, cv1_only: bool = False) -> list[Circuit]:
    layout = grid.layout
    reg = list(layout.register(label))
    anc = list(layout.ancilla_register)
    nq = grid.n_qubits
    n = len(reg)
    out: list[Circuit] = []
    if not anc and (D > 0 or not t.is_zero):
        raise ConfigError("dissipative terms need at least one ancilla qubit (n_p >= 1)")

    def cv1(gamma: float) -> Circuit:
        if cv1_only:
            full = _power(v1_block, n, gamma, reg, anc, nq)(dt)
            return Circuit(nq, full.gates[:-1], dict(full.metadata, part="controlled"))
        return _power(v1_block, n, gamma, reg, anc, nq, drop_controlled=drop_cv1)(dt)

    if D > 0 and not cv1_only:
        out.append(_power(vd_block, n, D / grid.R, reg, anc, nq)(dt))
    if t.is_linear:
        ctrl = list(layout.register(t.control))
        for m, q in enumerate(ctrl):
            f = 2 ** m * t.scale
            body = cv1(abs(f) / (2 * grid.R))
            out.append(Circuit(nq, (controlled(body, [(q, 1)]),), {"kind": "ladder-V1", "bit": m}))
        if not cv1_only:
            for m, q in enumerate(ctrl):
                f = 2 ** m * t.scale
                body = v2_block(n, f / 2 * dt).embed(reg, nq)
                out.append(Circuit(nq, (controlled(body, [(q, 1)]),), {"kind": "ladder-V2", "bit": m}))
    if t.constant:
        out.append(cv1(abs(t.constant) / (2 * grid.R)))
        if not cv1_only:
            out.append(v2_block(n, t.constant / 2 * dt).embed(reg, nq))
    return out


def assemble_step(grid: GridSpec, transport: TransportSpec, D: float, dt: float,
                  drop_cv1: bool = False, check_cfl: bool = True) -> Circuit:
    """One Trotter step as a circuit of per-axis blocks."""
    if D < 0:
        raise ConfigError("diffusivity must be non-negative")
    if check_cfl:
        transport.check_cfl(grid, dt)
    else:
        transport.check_grid(grid)
    layout = grid.layout
    axis_blocks = []
    for label in grid.labels:
        t = transport[label]
        factors = _axis_factors(grid, label, t, D, dt, drop_cv1)
        if not factors:
            continue
        selectors = list(layout.ancilla_register)
        if t.is_linear:
            selectors = list(layout.register(t.control)) + selectors
        meta = {"axis": label, "act": list(layout.register(label)), "selectors": selectors}
        axis_blocks.append(as_block(factors, grid.n_qubits, meta))
    return as_block(axis_blocks, grid.n_qubits,
                    {"kind": "step", "dt": dt, "D": D, "drop_cv1": drop_cv1})


def fuse_step(step: Circuit, n_steps: int = 1, max_work_qubits: int = 22) -> Circuit:
    """Replace per-axis blocks by dense per-selector kernels where that is cheaper.

    Compiling a block costs one gate-level pass over a (2·n_act + n_sel)-qubit
    register; applying the fused block costs ~2^{n_act} multiply-adds per
    amplitude.  Blocks are fused only when that wins over ``n_steps`` steps.
    """
    n = step.n_qubits
    gates = []
    for g in step.gates:
        body = g.body
        meta = body.metadata if body is not None else {}
        if "act" not in meta:
            gates.append(g)
            continue
        n_ops = len(body.kernel_ops())
        n_a, n_s = len(meta["act"]), len(meta["selectors"])
        work = 2 * n_a + n_s
        gate_cost = n_steps * n_ops * 2.0 ** n
        fused_cost = n_ops * 2.0 ** work + n_steps * 2.0 ** (n + n_a) / 4
        if work <= max_work_qubits and fused_cost < gate_cost:
            try:
                body = fuse_blocks(body, meta["act"], meta["selectors"], max_work_qubits)
            except (CapacityError, ShapeError):
                pass
        gates.append(controlled(body, g.controls))
    return Circuit(n, tuple(gates), dict(step.metadata), None)


@dataclass
class Evolution:
    field: np.ndarray            # real, unit ℓ₂, global phase removed
    complex_field: np.ndarray    # recovered block at p = 0, unit ℓ₂
    energy: list[float]          # ⟨Ô⟩ after each step
    weight: float
    state: object = field(repr=False, default=None)
    seconds: float = 0.0


def _steps(T: float, dt: float) -> int:
    n = T / dt
    if abs(n - round(n)) > 1e-9 * max(1.0, abs(n)):
        raise ConfigError(f"T/dt = {n} is not an integer")
    return int(round(n))


def evolve_state(grid: GridSpec, transport: TransportSpec, D: float, dt: float, n_steps: int,
                 initial: np.ndarray, drop_cv1: bool = False, record_energy: bool = True,
                 fuse: bool = True) -> Evolution:
    if n_steps < 1:
        raise ConfigError("n_steps must be at least 1")
    check_capacity(grid.n_qubits)
    start = time.perf_counter()
    warp = WarpSpec(grid.R, grid.n_p)
    step = assemble_step(grid, transport, D, dt, drop_cv1)
    if fuse:
        step = fuse_step(step, n_steps)
    ops = step.kernel_ops()
    state = prepare(initial, warp, grid.layout)
    trace = []
    for _ in range(n_steps):
        apply_ops(state.amplitudes, ops)
        if record_energy:
            trace.append(energy(state, warp))
    cfield, weight = recover(state, warp)
    return Evolution(real_field(cfield), cfield, trace, weight, state, time.perf_counter() - start)


def evolve(grid: GridSpec, transport: TransportSpec, D: float, dt: float, n_steps: int,
           initial: np.ndarray, drop_cv1: bool = False) -> tuple[np.ndarray, list[float]]:
    """Prepare, step ``n_steps`` times, recover.  Returns (field, ⟨Ô⟩ per step)."""
    ev = evolve_state(grid, transport, D, dt, n_steps, initial, drop_cv1)
    return ev.field, ev.energy


def cv1_circuit(grid: GridSpec, transport: TransportSpec, dt: float) -> Circuit:
    """Only the ancilla-controlled V1 powers of one step (the part ``drop_cv1`` removes)."""
    transport.check_grid(grid)
    blocks = []
    for label in grid.labels:
        factors = _axis_factors(grid, label, transport[label], 0.0, dt, False, cv1_only=True)
        blocks.extend(factors)
    return as_block(blocks, grid.n_qubits, {"kind": "c-V1"})


def cv1_identity_distance(grid: GridSpec, transport: TransportSpec, dt: float,
                          n_p: int | None = None) -> float:
    """‖U_cV1 − I‖_F / √dim for the controlled V1 part of one step."""
    if n_p is not None:
        grid = grid.with_(n_p=n_p)
    circ = cv1_circuit(grid, transport, dt)
    u = circuit_to_matrix(circ)
    dim = u.shape[0]
    return float(np.linalg.norm(u - np.eye(dim)) / math.sqrt(dim))
