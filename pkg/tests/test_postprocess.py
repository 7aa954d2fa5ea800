import numpy as np
import pytest

from qadvdiff.errors import DegenerateProjectionError, ShapeError
from qadvdiff.oracle import GaussianMixture, rel_l2, sample_initial
from qadvdiff.postprocess import (counts_to_field, mitigate, read_histogram, savgol2d, savgol_coeffs,
                                  threshold_mitigate, write_histogram)
from qadvdiff.statevec import QuantumState, RegisterLayout, sample_counts


def test_counts_delta():
    f = counts_to_field({"000101": 1000}, (8, 8))
    ref = np.zeros((8, 8))
    ref[5, 0] = 1
    assert np.array_equal(f, ref)


def test_counts_exact_probabilities():
    rng = np.random.default_rng(3)
    amp = rng.normal(size=(4, 4))
    amp /= np.linalg.norm(amp)
    lay = RegisterLayout.build([("x", 2), ("y", 2)])
    probs = lay.field_to_vector(amp ** 2)
    hist = {format(i, "04b"): p * 1e6 for i, p in enumerate(probs)}
    assert np.allclose(counts_to_field(hist, lay, shots=10 ** 6), np.abs(amp))


def test_counts_sampling_bound():
    u = sample_initial(GaussianMixture.corners((8, 8), 0.25, 0.125), (8, 8))
    lay = RegisterLayout.build([("x", 3), ("y", 3)])
    st = QuantumState(lay.field_to_vector(u), lay)
    f = counts_to_field(sample_counts(st, 100_000, seed=5), lay)
    assert rel_l2(f, np.abs(u)) <= 3 * np.sqrt(256 / 1e5)


def test_counts_width_mismatch():
    with pytest.raises(ShapeError):
        counts_to_field({"01": 3}, (4, 4))


def test_threshold_zero_eps_unchanged():
    f = np.arange(16.0).reshape(4, 4)
    assert np.allclose(threshold_mitigate(f, 0.0), f / np.linalg.norm(f))


def test_threshold_single_nonzero():
    f = np.zeros((4, 4))
    f[1, 2] = 3.0
    out = threshold_mitigate(f, 0.5)
    assert out[1, 2] == 1 and np.count_nonzero(out) == 1


def test_threshold_drops_and_redistributes():
    # squared weights after normalization; row y = 1-based index along axis 1
    p = np.array([[0.5, 0.3], [0.15, 0.05]])
    out = threshold_mitigate(np.sqrt(p), 0.06)
    # (1,1): 0.05 < 2·0.06 dropped; others survive
    assert out[1, 1] == 0
    assert np.allclose(out ** 2, [[0.5 + 0.05 / 3, 0.3 + 0.05 / 3], [0.15 + 0.05 / 3, 0]])


def test_threshold_on_sampled_data():
    u = sample_initial(GaussianMixture.corners((32, 32), 0.25, 1 / 16), (32, 32))
    lay = RegisterLayout.build([("x", 5), ("y", 5)])
    raw = counts_to_field(sample_counts(QuantumState(lay.field_to_vector(u), lay), 100_000, 7), lay)
    out = threshold_mitigate(raw, 1e-5)
    assert np.count_nonzero(out) < np.count_nonzero(raw)
    assert abs(np.linalg.norm(out) - 1) < 1e-12


def test_threshold_keeps_sign_and_rejects():
    f = np.array([[0.9, -0.4], [0.1, 0.1]])
    assert threshold_mitigate(f, 1e-3)[0, 1] < 0
    # everything below threshold: only the leading entry survives
    out = threshold_mitigate(np.array([[0.6, 0.5], [0.4, 0.3]]), 1.0)
    assert np.count_nonzero(out) == 1 and out[0, 0] == 1
    with pytest.raises(DegenerateProjectionError):
        threshold_mitigate(np.zeros((2, 2)), 1.0)
    with pytest.raises(ValueError):
        threshold_mitigate(f, -1.0)


def test_savgol_interpolating_fit_is_identity():
    c = savgol_coeffs(5, 4)
    assert np.allclose(c, [0, 0, 1, 0, 0])
    f = np.random.default_rng(2).normal(size=(8, 8))
    assert np.allclose(savgol2d(f, 5, 4), f)


def test_savgol_known_coefficients():
    assert np.allclose(savgol_coeffs(5, 2) * 35, [-3, 12, 17, 12, -3])
    assert np.allclose(savgol_coeffs(7, 3) * 21, [-2, 3, 6, 7, 6, 3, -2])


def test_savgol_constant_and_quadratic():
    assert np.allclose(savgol2d(np.full((8, 8), 2.5), 7, 0), 2.5)
    x, y = np.meshgrid(np.arange(32.0), np.arange(32.0), indexing="ij")
    f = 0.3 * x ** 2 - x * y + 2 * y + 1
    out = savgol2d(f, 7, 2)
    interior = (slice(3, -3), slice(3, -3))
    assert np.abs(out[interior] - f[interior]).max() < 1e-10


def test_savgol_validation():
    for w, o in ((4, 2), (5, 5), (0, 0)):
        with pytest.raises(ValueError):
            savgol_coeffs(w, o)
    with pytest.raises(ValueError):
        savgol2d(np.ones((4, 4)), 7, 3)


def test_mitigate_unit_norm():
    u = sample_initial(GaussianMixture.single((16, 16), 0.25), (16, 16))
    assert abs(np.linalg.norm(mitigate(u, 1e-5)) - 1) < 1e-12


def test_histogram_round_trip(tmp_path):
    h = {"0101": 3, "1111": 10, "0000": 1}
    write_histogram(tmp_path / "h.csv", h)
    assert (tmp_path / "h.csv").read_text().splitlines()[0] == "0000,1"
    assert read_histogram(tmp_path / "h.csv") == h
