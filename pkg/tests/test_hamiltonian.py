import numpy as np
import pytest

from _util import circulant_shift
from qadvdiff.errors import CapacityError, ContractError, ShapeError
from qadvdiff.grid import AxisTransport, GridSpec, TransportSpec
from qadvdiff.hamiltonian import (GammaSet, build_full_H, build_S, central_diffusion_matrix, check_hermitian,
                                  evolution_operator, exact_evolve, ladder_ops, shift_operator,
                                  upwind_matrix)
from qadvdiff.statevec import QuantumState


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_shift_is_cyclic_increment(n):
    assert np.array_equal(shift_operator(n), circulant_shift(2 ** n))


def test_ladder_range_and_action():
    sp, sm = ladder_ops(3, 2)
    # |..0 1> -> |..1 0>: index 1 -> 2
    assert sp[2, 1] == 1 and np.count_nonzero(sp) == 2
    assert np.array_equal(sm, sp.T)
    with pytest.raises(ValueError):
        ladder_ops(3, 4)


def test_s1_example_n2():
    ref = np.array([[-2, 1, 0, 1], [1, -2, 1, 0], [0, 1, -2, 1], [1, 0, 1, -2]])
    assert np.array_equal(build_S(2, "S1").real, ref)
    assert np.array_equal(build_S(2, "SD"), build_S(2, "S1"))


def test_s2_example_n2():
    ref = -1j * np.array([[0, 1, 0, -1], [-1, 0, 1, 0], [0, -1, 0, 1], [1, 0, -1, 0]])
    assert np.abs(build_S(2, "S2") - ref).max() == 0


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_s_operators_hermitian_circulant(n):
    for kind in ("S1", "S2"):
        s = build_S(n, kind)
        check_hermitian(s)
        assert np.allclose(np.roll(np.roll(s, 1, 0), 1, 1), s)


def test_s1_spectrum_nonpositive():
    assert np.linalg.eigvalsh(build_S(4, "S1")).max() < 1e-12


def test_build_s_rejects():
    with pytest.raises(ValueError):
        build_S(0, "S1")
    with pytest.raises(ValueError):
        build_S(2, "S3")


def test_gammas():
    g = GammaSet.of(v=2.0, D=0.5, R=4.0)
    assert (g.gamma_D, g.gamma_1, g.gamma_2) == (0.125, 0.25, 1.0)
    assert GammaSet.of(-2.0, 0, 4).gamma_1 == 0.25


def test_full_h_hermitian_and_structure():
    grid = GridSpec((2, 2), n_p=2, R=3.0)
    h = build_full_H(grid, TransportSpec.rotation(4), D=0.3)
    check_hermitian(h)
    n_sys = 16
    # ancilla-diagonal: η_k weighted symmetric part plus a shared skew part
    blocks = [h[k * n_sys:(k + 1) * n_sys, k * n_sys:(k + 1) * n_sys] for k in range(4)]
    assert np.allclose(h[:n_sys, n_sys:], 0)
    diff = blocks[3] - blocks[2]
    assert np.allclose(blocks[1] - blocks[0], diff)
    assert np.allclose(diff, diff.real)


def test_full_h_single_axis_constant():
    grid = GridSpec((3,), n_p=1, R=2.0)
    v, D = 0.6, 0.2
    h = build_full_H(grid, TransportSpec.constant(x=v), D)
    h1 = (D / 2.0) * build_S(3, "S1") + (v / 4.0) * build_S(3, "S1")
    h2 = (v / 2) * build_S(3, "S2")
    ref = np.kron(np.diag([-1.0, 0.0]), h1) + np.kron(np.eye(2), h2)
    assert np.abs(h - ref).max() < 1e-14


def test_full_h_capacity():
    with pytest.raises(CapacityError):
        build_full_H(GridSpec((6, 6), n_p=1), TransportSpec.none(), 1.0)


def test_evolution_operator_unitary_and_sign():
    h = build_S(2, "S2")
    u = evolution_operator(h, 0.3)
    assert np.allclose(u.conj().T @ u, np.eye(4))
    w, vecs = np.linalg.eigh(h)
    assert np.allclose(u @ vecs[:, 0], np.exp(-0.3j * w[0]) * vecs[:, 0])


def test_non_hermitian_rejected():
    with pytest.raises(ContractError):
        evolution_operator(np.array([[0, 1], [0, 0]], dtype=complex), 1.0)


def test_exact_evolve_shape():
    st = QuantumState(np.array([1, 0, 0, 0], dtype=complex))
    out = exact_evolve(build_S(2, "S2"), 0.1, st)
    assert abs(out.norm() - 1) < 1e-12
    with pytest.raises(ShapeError):
        exact_evolve(build_S(3, "S2"), 0.1, st)


def test_classical_matrices():
    up = upwind_matrix(4, 1.0)
    assert np.allclose(up.sum(axis=0), 0)
    assert np.allclose(upwind_matrix(4, -1.0).sum(axis=0), 0)
    lap = central_diffusion_matrix(4, 2.0)
    assert np.allclose(lap, 2.0 * build_S(2, "S1").real)


def test_linear_transport_terms():
    grid = GridSpec((2, 2), n_p=1, R=1.0)
    t = TransportSpec({"x": AxisTransport(control="y", scale=0.5)})
    check_hermitian(build_full_H(grid, t, 0.0))
