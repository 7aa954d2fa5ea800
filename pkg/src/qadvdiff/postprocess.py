"""Shot histograms to fields, position-scaled thresholding, and Savitzky–Golay smoothing."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateProjectionError, ShapeError
from .statevec import RegisterLayout


def counts_to_field(hist: Mapping[str, int], layout: RegisterLayout | Sequence[int],
                    shots: int | None = None) -> np.ndarray:
    """field = √(count/shots) per grid point, ℓ₂-normalized; unseen points are 0.

    Bitstrings are the binary flat system index (highest qubit first).
    """
    if not isinstance(layout, RegisterLayout):
        shape = tuple(int(n) for n in layout)
        layout = RegisterLayout.build([(a, int(np.log2(n))) for a, n in zip("xyz", shape)])
    total = sum(hist.values()) if shots is None else shots
    if total <= 0:
        raise ValueError("histogram has no shots")
    n_sys = layout.n_system
    vec = np.zeros(2 ** n_sys)
    for bits, count in hist.items():
        if len(bits) != n_sys:
            raise ShapeError(f"bitstring {bits!r} has width {len(bits)}, expected {n_sys}")
        vec[int(bits, 2)] += count
    vec = np.sqrt(vec / total)
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise DegenerateProjectionError("histogram is empty")
    return layout.vector_to_field(vec / nrm)


def threshold_mitigate(field: np.ndarray, eps_cut: float, row_axis: int = 1) -> np.ndarray:
    """Zero entries whose squared weight is below (y+1)·eps_cut and spread the removed mass.

    ``y`` is the 0-based coordinate along ``row_axis`` (the shear's velocity
    axis); entries that survive share the removed probability equally.  The
    largest entry is always kept, so a one-point field passes through unchanged.
    """
    if eps_cut < 0:
        raise ValueError("eps_cut must be non-negative")
    f = np.asarray(field, dtype=float)
    nrm = np.linalg.norm(f)
    if nrm == 0:
        raise DegenerateProjectionError("field is zero")
    f = f / nrm
    if eps_cut == 0:
        return f
    axis = row_axis if f.ndim > 1 else 0
    shape = [1] * f.ndim
    shape[axis] = f.shape[axis]
    y = np.arange(1, f.shape[axis] + 1, dtype=float).reshape(shape)
    p = f * f
    drop = (p < y * eps_cut) & (p > 0)
    drop.flat[int(np.argmax(p))] = False
    keep = (p > 0) & ~drop
    n_keep = int(keep.sum())
    removed = float(p[drop].sum())
    p = np.where(keep, p + removed / n_keep, 0.0)
    out = np.sign(f) * np.sqrt(p)
    return out / np.linalg.norm(out)


def savgol_coeffs(window: int, order: int) -> np.ndarray:
    """Smoothing weights: value at the window centre of the least-squares polynomial fit."""
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    if not 0 <= order < window:
        raise ValueError("need 0 <= order < window")
    half = window // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    design = np.vander(offsets, order + 1, increasing=True)
    return np.linalg.pinv(design)[0]


def _smooth_axis(f: np.ndarray, coeffs: np.ndarray, axis: int) -> np.ndarray:
    half = len(coeffs) // 2
    out = np.zeros_like(f)
    for k, c in enumerate(coeffs):
        # periodic padding: out[i] += c_k · f[i + k - half]
        out += c * np.roll(f, half - k, axis=axis)
    return out


def savgol2d(field: np.ndarray, window: int = 7, order: int = 3) -> np.ndarray:
    """Savitzky–Golay along x, then y (then z), with periodic wrap."""
    f = np.asarray(field, dtype=float)
    coeffs = savgol_coeffs(window, order)
    if any(window > n for n in f.shape):
        raise ValueError(f"window {window} exceeds an axis of shape {f.shape}")
    for axis in range(f.ndim):
        f = _smooth_axis(f, coeffs, axis)
    return f


def mitigate(field: np.ndarray, eps_cut: float, window: int = 7, order: int = 3,
             row_axis: int = 1) -> np.ndarray:
    """Threshold, smooth, renormalize."""
    f = savgol2d(threshold_mitigate(field, eps_cut, row_axis), window, order)
    return f / np.linalg.norm(f)


def write_histogram(path: str | Path, hist: Mapping[str, int]) -> None:
    with open(path, "w") as fh:
        for bits in sorted(hist):
            fh.write(f"{bits},{hist[bits]}\n")


def read_histogram(path: str | Path) -> dict[str, int]:
    out: dict[str, int] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            bits, count = line.split(",")
            out[bits] = out.get(bits, 0) + int(count)
    return out
