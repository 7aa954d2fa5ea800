"""Reference solutions: analytic benchmarks, a classical finite-difference solver and error metrics.

Fields are real arrays indexed ``[x, y, (z)]`` on integer grid coordinates.
Gaussians are wrapped periodically by summing lattice images until the image
contribution falls below 1e-14.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CFLError, ConfigError, ShapeError
from .grid import GridSpec, TransportSpec, coordinate_grids

IMAGE_TOL = 1e-14


@dataclass(frozen=True)
class GaussianMixture:
    centers: tuple[tuple[float, ...], ...]
    sigma: float
    normalized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(tuple(float(v) for v in c) for c in self.centers))
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if not self.centers:
            raise ConfigError("mixture needs at least one centre")
        if len({len(c) for c in self.centers}) != 1:
            raise ConfigError("all centres need the same dimension")

    @property
    def d(self) -> int:
        return len(self.centers[0])

    @classmethod
    def single(cls, shape: Sequence[int], sigma_frac: float) -> "GaussianMixture":
        """One centre at L/2 on every axis with σ = sigma_frac·L (L from the first axis)."""
        return cls((tuple(n / 2 for n in shape),), sigma_frac * shape[0])

    @classmethod
    def corners(cls, shape: Sequence[int], offset_frac: float, sigma_frac: float) -> "GaussianMixture":
        """2^d centres at L/2 ± offset_frac·L."""
        L = shape[0]
        axes = [(n / 2 - offset_frac * n, n / 2 + offset_frac * n) for n in shape]
        centers = np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(shape), -1).T
        return cls(tuple(map(tuple, centers)), sigma_frac * L)


def _n_images(sigma: float, L: int, spread: float = 0.0) -> int:
    # images beyond this offset contribute less than IMAGE_TOL
    reach = sigma * math.sqrt(2 * math.log(1 / IMAGE_TOL)) + spread
    return int(math.ceil(reach / L)) + 1


def _wrapped_gauss(dx: np.ndarray, sigma: float, L: int, spread: float = 0.0) -> np.ndarray:
    m = _n_images(sigma, L, spread)
    out = np.zeros_like(dx, dtype=float)
    for k in range(-m, m + 1):
        out += np.exp(-((dx + k * L) ** 2) / (2 * sigma * sigma))
    return out


def _finish(u: np.ndarray, mix: GaussianMixture) -> np.ndarray:
    if mix.normalized:
        u = u / np.linalg.norm(u)
    return u


def _check(mix: GaussianMixture, shape: Sequence[int]) -> tuple[int, ...]:
    shape = tuple(int(n) for n in (shape.shape if isinstance(shape, GridSpec) else shape))
    if len(shape) != mix.d:
        raise ShapeError(f"mixture is {mix.d}-D but grid has shape {shape}")
    return shape


def sample_initial(mix: GaussianMixture, shape: Sequence[int]) -> np.ndarray:
    shape = _check(mix, shape)
    coords = [np.arange(n, dtype=float) for n in shape]
    u = np.zeros(shape)
    for c in mix.centers:
        factors = [_wrapped_gauss(x - mu, mix.sigma, n) for x, mu, n in zip(coords, c, shape)]
        u += np.einsum(",".join("abc"[: len(shape)]) + "->" + "abc"[: len(shape)], *factors) \
            if len(shape) > 1 else factors[0]
    return _finish(u, mix)


def spread_sigma(sigma: float, D: float, T: float) -> float:
    """Diffusion widens an exp(-r²/2σ²) profile to σ_T² = σ² + 2DT."""
    return math.sqrt(sigma * sigma + 2 * D * T)


def analytic_shear(mix: GaussianMixture, shape: Sequence[int], T: float, D: float = 0.0) -> np.ndarray:
    """u(x, y, T) = u₀(x − y·T/(L/2), y) with σ → σ_T."""
    shape = _check(mix, shape)
    if len(shape) != 2:
        raise ShapeError("shear benchmark is 2-D")
    Lx, Ly = shape
    s = spread_sigma(mix.sigma, D, T)
    x, y = np.meshgrid(np.arange(Lx, dtype=float), np.arange(Ly, dtype=float), indexing="ij")
    shift = y * T / (Lx / 2)
    u = np.zeros(shape)
    for mx, my in mix.centers:
        u += _wrapped_gauss(x - shift - mx, s, Lx, spread=float(shift.max())) * _wrapped_gauss(y - my, s, Ly)
    return _finish(u, mix)


def analytic_rotation(mix: GaussianMixture, shape: Sequence[int], T: float, D: float = 0.0) -> np.ndarray:
    """Clockwise rigid rotation by 2T/L about (L/2, L/2); images taken in rotated coordinates."""
    shape = _check(mix, shape)
    if len(shape) != 2 or shape[0] != shape[1]:
        raise ShapeError("rotation benchmark needs a square 2-D grid")
    L = shape[0]
    th = 2 * T / L
    s = spread_sigma(mix.sigma, D, T)
    x, y = np.meshgrid(np.arange(L, dtype=float), np.arange(L, dtype=float), indexing="ij")
    dx, dy = x - L / 2, y - L / 2
    xr = dx * math.cos(th) - dy * math.sin(th) + L / 2
    yr = dx * math.sin(th) + dy * math.cos(th) + L / 2
    u = np.zeros(shape)
    for mx, my in mix.centers:
        u += _wrapped_gauss(xr - mx, s, L, spread=L) * _wrapped_gauss(yr - my, s, L, spread=L)
    return _finish(u, mix)


def analytic_shear3d(mix: GaussianMixture, shape: Sequence[int], T: float, D: float = 0.0) -> np.ndarray:
    """u = u₀(x − z·T/(L/2), y − z·T/(L/2), z) with σ → σ_T."""
    shape = _check(mix, shape)
    if len(shape) != 3:
        raise ShapeError("3-D shear benchmark needs a 3-D grid")
    Lx, Ly, Lz = shape
    s = spread_sigma(mix.sigma, D, T)
    x, y, z = np.meshgrid(*[np.arange(n, dtype=float) for n in shape], indexing="ij")
    shift = z * T / (Lz / 2)
    u = np.zeros(shape)
    for mx, my, mz in mix.centers:
        u += (_wrapped_gauss(x - shift - mx, s, Lx, spread=float(shift.max()))
              * _wrapped_gauss(y - shift - my, s, Ly, spread=float(shift.max()))
              * _wrapped_gauss(z - mz, s, Lz))
    return _finish(u, mix)


# --------------------------------------------------------------------------
# classical solver


def _upwind(u: np.ndarray, v, axis: int) -> np.ndarray:
    """-v ∂u/∂x_axis with first-order upwinding (v may vary across other axes)."""
    back = u - np.roll(u, 1, axis=axis)     # u_i - u_{i-1}
    fwd = np.roll(u, -1, axis=axis) - u     # u_{i+1} - u_i
    v = np.broadcast_to(v, u.shape)
    return -np.where(v >= 0, v * back, v * fwd)


def _laplacian_1d(u: np.ndarray, axis: int) -> np.ndarray:
    return np.roll(u, -1, axis=axis) - 2 * u + np.roll(u, 1, axis=axis)


def fd_solve(grid: GridSpec | Sequence[int], transport: TransportSpec, D: float, dt: float,
             n_steps: int, initial: np.ndarray) -> np.ndarray:
    """Forward-Euler upwind/central scheme with the same per-axis splitting as the circuits.

    Each step sweeps x → y → z; per axis: diffusion, the linear part of the
    velocity, then its constant offset, each as its own Euler sub-step.
    """
    shape = grid.shape if isinstance(grid, GridSpec) else tuple(grid)
    u = np.array(initial, dtype=float)
    if u.shape != tuple(shape):
        raise ShapeError("initial field does not match grid")
    labels = ("x", "y", "z")[: len(shape)]
    coords = coordinate_grids(shape)
    top = 0.0
    for label, t in transport.axes.items():
        if label not in labels or (t.is_linear and t.control not in labels):
            raise ConfigError(f"transport on {label!r} does not fit the grid")
        if t.is_linear:
            top = max(top, abs(t.scale) * (shape[labels.index(t.control)] - 1))
        top = max(top, abs(t.constant))
    if top * dt > 1 + 1e-12:
        raise CFLError(f"CFL number {top * dt:.4g} exceeds 1")
    for _ in range(n_steps):
        for axis, label in enumerate(labels):
            t = transport[label]
            if D:
                u = u + dt * D * _laplacian_1d(u, axis)
            if t.is_linear:
                u = u + dt * _upwind(u, t.scale * coords[t.control], axis)
            if t.constant:
                u = u + dt * _upwind(u, t.constant, axis)
    return u


# --------------------------------------------------------------------------
# metrics


def rel_l2(u_num: np.ndarray, u_ref: np.ndarray) -> float:
    u_num = np.asarray(u_num)
    u_ref = np.asarray(u_ref)
    if u_num.shape != u_ref.shape:
        raise ShapeError(f"shapes differ: {u_num.shape} vs {u_ref.shape}")
    ref = np.linalg.norm(u_ref)
    if ref == 0:
        raise ValueError("reference field is zero")
    return float(np.linalg.norm(u_num - u_ref) / ref)


def fit_variance(u: np.ndarray) -> np.ndarray:
    """Per-axis second central moment of |u|, centred on the circular mean."""
    w = np.abs(np.asarray(u, dtype=complex if np.iscomplexobj(u) else float))
    total = w.sum()
    out = []
    for axis, n in enumerate(w.shape):
        other = tuple(a for a in range(w.ndim) if a != axis)
        marg = w.sum(axis=other) if other else w
        xs = np.arange(n)
        phase = np.angle(np.sum(marg * np.exp(2j * np.pi * xs / n)))
        mean = (phase * n / (2 * np.pi)) % n
        dx = (xs - mean + n / 2) % n - n / 2
        out.append(float(np.sum(marg * dx * dx) / total))
    return np.array(out)
