import numpy as np
import pytest

from qadvdiff.errors import DegenerateProjectionError
from qadvdiff.grid import GridSpec, TransportSpec
from qadvdiff.oracle import GaussianMixture, rel_l2, sample_initial
from qadvdiff.schrodingerise import (WarpSpec, ancilla_init, energy, prepare, real_field, recover,
                                     recover_by_circuit)
from qadvdiff.statevec import RegisterLayout
from qadvdiff.transport import evolve, evolve_state

H2 = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
X2 = np.array([[0, 1], [1, 0]])


def _layout(n_sys, n_p):
    return RegisterLayout.build([("x", n_sys)], n_p)


def test_warp_grid():
    w = WarpSpec(4.0, 2)
    assert np.allclose(w.p_values, [-4 * np.pi, -2 * np.pi, 0, 2 * np.pi])
    assert np.array_equal(w.eta_values, [-2, -1, 0, 1])
    assert w.recovery_index == 2
    with pytest.raises(ValueError):
        WarpSpec(0.0, 1)


def test_ancilla_init_n1():
    a = ancilla_init(WarpSpec(4.0, 1))
    ref = np.array([np.exp(-4 * np.pi), 1.0])
    assert np.allclose(a, ref / np.linalg.norm(ref), atol=1e-15)


@pytest.mark.parametrize("n_p", [1, 2, 3, 4])
def test_ancilla_init_even_and_normalized(n_p):
    a = ancilla_init(WarpSpec(1.5, n_p))
    n = a.size
    assert abs(np.linalg.norm(a) - 1) < 1e-12
    for j in range(1, n):
        assert abs(a[j] - a[n - j]) < 1e-12


def test_prepare_delta_n1_ancilla():
    """The ancilla carries the transform applied to the profile (QFT then top-bit X)."""
    warp = WarpSpec(4.0, 1)
    lay = _layout(2, 1)
    field = np.zeros(4)
    field[1] = 1
    st = prepare(field, warp, lay)
    anc = st.blocks()[:, 1]
    assert np.allclose(anc, X2 @ H2 @ ancilla_init(warp), atol=1e-14)


@pytest.mark.parametrize("n_p", [1, 2, 3])
def test_round_trip(n_p, rng):
    lay = _layout(4, n_p)
    warp = WarpSpec(2.0, n_p)
    f = rng.normal(size=16)
    st = prepare(f, warp, lay)
    assert abs(st.norm() - 1) < 1e-12
    out, weight = recover(st, warp)
    # recovered up to a global phase
    overlap = np.vdot(out.ravel(), f / np.linalg.norm(f))
    assert abs(abs(overlap) - 1) < 1e-10
    assert np.abs(out * overlap - f / np.linalg.norm(f)).max() < 1e-10
    a = ancilla_init(warp)
    assert abs(weight - abs(a[warp.recovery_index]) ** 2) < 1e-12
    assert weight == energy(st, warp)
    out2, w2 = recover_by_circuit(st, warp)
    assert np.abs(out2 - out).max() < 1e-10 and abs(w2 - weight) < 1e-12


def test_recover_degenerate():
    warp = WarpSpec(1.0, 1)
    st = prepare(np.ones(4), warp, _layout(2, 1))
    # ancilla orthogonal to the p = 0 row
    row = warp.recovery_row
    st.amplitudes[:] = 0
    st.blocks()[:, 0] = np.array([row[1], -row[0]]).conj()
    with pytest.raises(DegenerateProjectionError):
        recover(st, warp)


def test_real_field_removes_phase():
    f = np.array([1.0, 2.0, -0.5])
    assert np.allclose(real_field(np.exp(0.7j) * f), f / np.linalg.norm(f))


def test_diffusion_decays_energy():
    grid = GridSpec((4,), n_p=2, R=1.0)
    f = sample_initial(GaussianMixture.single((16,), 0.15), (16,))
    _, trace = evolve(grid, TransportSpec.none(), 1.0, 0.1, 5, f)
    diffs = np.diff(trace)
    assert (diffs < 0).all()


def test_energy_constant_without_dynamics():
    grid = GridSpec((4,), n_p=2, R=1.0)
    f = sample_initial(GaussianMixture.single((16,), 0.2), (16,))
    out, trace = evolve(grid, TransportSpec.none(), 0.0, 0.1, 3, f)
    assert np.ptp(trace) < 1e-12
    assert np.abs(out - f).max() < 1e-10


@pytest.mark.parametrize("n_steps,D", [(40, 1.0)])
def test_energy_nonincreasing_d1(n_steps, D):
    grid = GridSpec((3,), n_p=3, R=8.0)
    f = sample_initial(GaussianMixture.single((8,), 0.25), (8,))
    ev = evolve_state(grid, TransportSpec.constant(x=0.5), D, 0.2, n_steps, f)
    assert all(0 <= e <= 1 for e in ev.energy)
    assert (np.diff(ev.energy) <= 1e-9).all()


def test_translation_matches_fd_64():
    grid = GridSpec((6,), n_p=3, R=1.0)
    f = sample_initial(GaussianMixture.single((64,), 0.1), (64,))
    out, _ = evolve(grid, TransportSpec.constant(x=1.0), 0.0, 0.1, 80, f)
    ref = np.roll(f, 8)
    assert rel_l2(out, ref) <= 5e-2
