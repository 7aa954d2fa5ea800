"""Grid, warp and transport-field descriptions shared by the circuit and oracle code."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import CFLError, ConfigError
from .statevec import RegisterLayout

AXIS_LABELS = ("x", "y", "z")


@dataclass(frozen=True)
class GridSpec:
    """Periodic grid with ``2**n`` points per axis, unit spacing, and the warp register."""

    n_axis: tuple[int, ...]
    n_p: int = 1
    R: float = 4.0
    h: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "n_axis", tuple(int(n) for n in self.n_axis))
        if not 1 <= len(self.n_axis) <= 3:
            raise ConfigError("grids have 1 to 3 axes")
        if any(n < 1 for n in self.n_axis):
            raise ConfigError("every axis needs at least one qubit")
        if self.n_p < 0:
            raise ConfigError("n_p must be non-negative")
        if not self.R > 0:
            raise ConfigError("warp radius R must be positive")
        if self.h != 1.0:
            raise ConfigError("only unit grid spacing is supported")

    @property
    def d(self) -> int:
        return len(self.n_axis)

    @property
    def labels(self) -> tuple[str, ...]:
        return AXIS_LABELS[: self.d]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(2 ** n for n in self.n_axis)

    @property
    def n_system(self) -> int:
        return sum(self.n_axis)

    @property
    def n_qubits(self) -> int:
        return self.n_system + self.n_p

    @property
    def layout(self) -> RegisterLayout:
        return RegisterLayout.build(list(zip(self.labels, self.n_axis)), self.n_p)

    def length(self, label: str) -> int:
        return self.shape[self.labels.index(label)]

    def with_(self, **kw) -> "GridSpec":
        vals = dict(n_axis=self.n_axis, n_p=self.n_p, R=self.R, h=self.h)
        vals.update(kw)
        return GridSpec(**vals)


@dataclass(frozen=True)
class AxisTransport:
    """v_α = scale * (coordinate of ``control``) + constant.

    The linear part and the constant are applied as separate sub-steps, so the
    upwind coefficient is |scale|·c + |constant| rather than |v|.
    """

    constant: float = 0.0
    control: str | None = None
    scale: float = 0.0

    def __post_init__(self):
        if self.control is None and self.scale != 0.0:
            raise ConfigError("a linear scale needs a controlling axis")

    @property
    def is_linear(self) -> bool:
        return self.control is not None and self.scale != 0.0

    @property
    def is_zero(self) -> bool:
        return not self.is_linear and self.constant == 0.0


@dataclass(frozen=True)
class TransportSpec:
    axes: Mapping[str, AxisTransport] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for label, t in dict(self.axes).items():
            if label not in AXIS_LABELS:
                raise ConfigError(f"unknown axis {label!r}")
            if t.control == label:
                raise ConfigError(f"axis {label!r} cannot control its own velocity")
            if t.control is not None and t.control not in AXIS_LABELS:
                raise ConfigError(f"unknown controlling axis {t.control!r}")
            clean[label] = t
        object.__setattr__(self, "axes", clean)

    def __getitem__(self, label: str) -> AxisTransport:
        return self.axes.get(label, AxisTransport())

    def check_grid(self, grid: GridSpec) -> None:
        for label, t in self.axes.items():
            if t.is_zero:
                continue
            if label not in grid.labels:
                raise ConfigError(f"transport acts on axis {label!r} which the grid lacks")
            if t.is_linear and t.control not in grid.labels:
                raise ConfigError(f"transport on {label!r} is controlled by missing axis {t.control!r}")

    def max_speed(self, grid: GridSpec) -> float:
        """Largest sub-step speed over the grid (linear part and offset are separate steps)."""
        top = 0.0
        for label, t in self.axes.items():
            if t.is_linear:
                top = max(top, abs(t.scale) * (grid.length(t.control) - 1))
            top = max(top, abs(t.constant))
        return top

    def check_cfl(self, grid: GridSpec, dt: float) -> None:
        self.check_grid(grid)
        courant = self.max_speed(grid) * dt / grid.h
        if courant > 1 + 1e-12:
            raise CFLError(f"CFL number {courant:.4g} exceeds 1 (dt={dt})")

    def velocity(self, label: str, coords: Mapping[str, np.ndarray]) -> np.ndarray | float:
        t = self[label]
        v = t.constant
        if t.is_linear:
            v = v + t.scale * coords[t.control]
        return v

    # named fields ---------------------------------------------------------

    @classmethod
    def none(cls) -> "TransportSpec":
        return cls({})

    @classmethod
    def constant(cls, **components: float) -> "TransportSpec":
        return cls({a: AxisTransport(constant=float(v)) for a, v in components.items() if v})

    @classmethod
    def shear(cls, L: int) -> "TransportSpec":
        """v = (y/(L/2), 0)."""
        return cls({"x": AxisTransport(control="y", scale=2.0 / L)})

    @classmethod
    def rotation(cls, L: int) -> "TransportSpec":
        """Rigid rotation about the domain centre as shear plus offset per axis."""
        return cls({
            "x": AxisTransport(constant=-1.0, control="y", scale=2.0 / L),
            "y": AxisTransport(constant=1.0, control="x", scale=-2.0 / L),
        })

    @classmethod
    def shear3d(cls, L: int) -> "TransportSpec":
        """v = (z/(L/2), z/(L/2), 0)."""
        t = AxisTransport(control="z", scale=2.0 / L)
        return cls({"x": t, "y": t})

    @classmethod
    def hardware(cls, L: int) -> "TransportSpec":
        """v = (y/L, 0)."""
        return cls({"x": AxisTransport(control="y", scale=1.0 / L)})


def coordinate_grids(shape: Sequence[int]) -> dict[str, np.ndarray]:
    """Integer coordinate arrays (``indexing='ij'``) keyed by axis label."""
    grids = np.meshgrid(*[np.arange(n, dtype=float) for n in shape], indexing="ij")
    return dict(zip(AXIS_LABELS, grids))
