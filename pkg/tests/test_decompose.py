import numpy as np
import pytest

from qadvdiff.decompose import decompose, gate_report
from qadvdiff.errors import ContractError
from qadvdiff.gates import (Circuit, circuit_to_matrix, controlled, controlled_power_block, cx, h, phase,
                            qft, rz, v1_block, v2_block, w_j, x)

ALLOWED = {"X", "H", "RZ", "P", "CX", "GPH"}


def _same(a, b):
    return np.abs(circuit_to_matrix(a) - circuit_to_matrix(b)).max() < 1e-9


def _ctrl(body_gates, n, ctrl):
    return Circuit(n, (controlled(Circuit(n, tuple(body_gates)), ctrl),))


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_multi_controlled_x(k):
    n = k + 1
    c = _ctrl([x(k)], n, [(q, 1) for q in range(k)])
    d = decompose(c)
    assert {g.name for g in d.gates} <= ALLOWED
    assert _same(c, d)


@pytest.mark.parametrize("k,extra", [(3, 0), (3, 1), (4, 2), (5, 3)])
def test_mcx_with_and_without_idle_wires(k, extra):
    n = k + 1 + extra
    c = _ctrl([x(k)], n, [(q, 1) for q in range(k)])
    assert _same(c, decompose(c))


@pytest.mark.parametrize("gate", [h(2), rz(2, 0.7), phase(2, -1.3), cx(2, 3)])
def test_controlled_primitives(gate):
    c = _ctrl([gate], 4, [(0, 1), (1, 0)])
    assert _same(c, decompose(c))


def test_controlled_v_blocks():
    for body in (v1_block(2, 0.3), v2_block(3, -0.2), w_j(3, 3, 0.4, 0.2, 1)):
        c = Circuit(body.n_qubits + 1, (controlled(body.widen(body.n_qubits + 1), [(body.n_qubits, 1)]),))
        assert _same(c, decompose(c))


def test_controlled_power_block_decomposes():
    c = controlled_power_block(lambda t: v1_block(2, t), 2, 0.15)
    d = decompose(c)
    assert {g.name for g in d.gates} <= ALLOWED
    assert _same(c, d)


def test_qft_decomposes():
    assert _same(qft(3), decompose(qft(3)))


def test_report_counts():
    c = Circuit(2, (h(0), cx(0, 1), rz(1, 0.2)))
    r = gate_report(c)
    assert (r.one_qubit_count, r.cnot_count, r.depth) == (2, 1, 3)
    assert r.as_dict()["cnot_count"] == 1


def test_report_needs_decomposed():
    with pytest.raises(ContractError):
        gate_report(_ctrl([x(1)], 2, [(0, 1)]))


def test_toffoli_cost():
    r = gate_report(decompose(_ctrl([x(2)], 3, [(0, 1), (1, 1)])))
    assert r.cnot_count == 6


def test_counts_grow_with_register():
    counts = [gate_report(decompose(controlled_power_block(lambda t, n=n: v1_block(n, t), 1, 0.1))).cnot_count
              for n in (3, 4, 5)]
    assert counts[0] < counts[1] < counts[2]
