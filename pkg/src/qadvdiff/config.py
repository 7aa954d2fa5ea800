"""Flat ``key = value`` experiment configs and the shipped presets.

Keys (all optional unless noted)::

    n          qubits per axis, e.g. ``6,6`` (required)
    n_p        warp register width
    R          warp radius
    transport  none | shear | rotation | shear3d | hardware | custom
    v_x, v_y, v_z
               linear velocity expressions in x, y, z and L, e.g. ``y/(L/2) - 1``;
               override the named transport per axis
    D, dt, T   diffusivity, step, final time
    dts        comma list of steps for ``sweep``
    initial    single | corners
    sigma_frac σ as a fraction of L
    offset_frac  corner offset as a fraction of L
    drop_cv1   true | false
    seed, shots, eps_cut, sg_window, sg_order
    oracle     auto | analytic | fd | none
    out_dir    output directory
    max_qubits memory cap for this run
    long       marks full-scale runs that need --allow-long
    sweep_n_alpha, sweep_n_p, gate_transport   gatecount sweep
"""

from __future__ import annotations

import ast
import operator
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid import AXIS_LABELS, AxisTransport, GridSpec, TransportSpec
from .oracle import (GaussianMixture, analytic_rotation, analytic_shear, analytic_shear3d, fd_solve,
                     sample_initial, spread_sigma)

NAMED_TRANSPORTS = ("none", "shear", "rotation", "shear3d", "hardware", "custom")


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(p) for p in s.replace(" ", "").split(",") if p)


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(p) for p in s.replace(" ", "").split(",") if p)


def _frac(s: str) -> float:
    s = s.strip()
    if "/" in s:
        a, b = s.split("/")
        return float(a) / float(b)
    return float(s)


@dataclass(frozen=True)
class ExperimentConfig:
    n: tuple[int, ...] = ()
    n_p: int = 1
    R: float = 4.0
    transport: str = "none"
    velocity: tuple[tuple[str, str], ...] = ()
    D: float = 0.0
    dt: float = 0.1
    T: float = 1.0
    dts: tuple[float, ...] = ()
    initial: str = "single"
    sigma_frac: float = 0.25
    offset_frac: float = 0.25
    drop_cv1: bool = False
    seed: int = 0
    shots: int = 100000
    eps_cut: float = 1e-5
    sg_window: int = 7
    sg_order: int = 3
    oracle: str = "auto"
    out_dir: str = "out"
    max_qubits: int | None = None
    long: bool = False
    sweep_n_alpha: tuple[int, ...] = (3, 4, 5, 6, 7, 8)
    sweep_n_p: tuple[int, ...] = (1, 2, 3)
    gate_transport: float = 1.0
    name: str = field(default="custom", compare=False)

    # derived objects -----------------------------------------------------

    def validate(self) -> "ExperimentConfig":
        if not self.n:
            raise ConfigError("config needs `n` (qubits per axis)")
        if self.transport not in NAMED_TRANSPORTS:
            raise ConfigError(f"unknown transport {self.transport!r}")
        if self.initial not in ("single", "corners"):
            raise ConfigError(f"unknown initial state {self.initial!r}")
        if self.oracle not in ("auto", "analytic", "fd", "none"):
            raise ConfigError(f"unknown oracle {self.oracle!r}")
        if self.dt <= 0 or self.T <= 0:
            raise ConfigError("dt and T must be positive")
        if self.D < 0:
            raise ConfigError("D must be non-negative")
        grid, tspec = self.grid(), self.transport_spec()
        for dt in (self.dt,) + self.dts:
            self.n_steps(dt)
            tspec.check_cfl(grid, dt)
        return self

    def n_steps(self, dt: float | None = None) -> int:
        dt = self.dt if dt is None else dt
        k = self.T / dt
        if abs(k - round(k)) > 1e-9 * max(1.0, abs(k)):
            raise ConfigError(f"T/dt = {k} is not an integer")
        return int(round(k))

    def grid(self) -> GridSpec:
        return GridSpec(self.n, n_p=self.n_p, R=self.R)

    @property
    def L(self) -> int:
        return 2 ** self.n[0]

    def transport_spec(self) -> TransportSpec:
        L = self.L
        d = len(self.n)
        named = {
            "none": TransportSpec.none,
            "custom": TransportSpec.none,
            "shear": lambda: TransportSpec.shear(L),
            "rotation": lambda: TransportSpec.rotation(L),
            "shear3d": lambda: TransportSpec.shear3d(L),
            "hardware": lambda: TransportSpec.hardware(L),
        }[self.transport]()
        axes = dict(named.axes)
        for label, expr in self.velocity:
            axes[label] = parse_velocity(expr, L, AXIS_LABELS[:d])
        spec = TransportSpec(axes)
        spec.check_grid(self.grid())
        return spec

    def mixture(self) -> GaussianMixture:
        shape = self.grid().shape
        if self.initial == "single":
            return GaussianMixture.single(shape, self.sigma_frac)
        return GaussianMixture.corners(shape, self.offset_frac, self.sigma_frac)

    def initial_field(self) -> np.ndarray:
        return sample_initial(self.mixture(), self.grid().shape)

    def oracle_kind(self) -> str:
        if self.oracle != "auto":
            return self.oracle
        if self.velocity or self.transport in ("hardware", "custom"):
            return "fd"
        return "analytic"

    def reference(self, dt: float | None = None) -> np.ndarray | None:
        """Oracle field at time T, or None when the oracle is switched off."""
        kind = self.oracle_kind()
        if kind == "none":
            return None
        if kind == "fd":
            dt = self.dt if dt is None else dt
            u = fd_solve(self.grid(), self.transport_spec(), self.D, dt, self.n_steps(dt),
                         self.initial_field())
            return u / np.linalg.norm(u)
        mix, shape = self.mixture(), self.grid().shape
        if self.velocity:
            raise ConfigError("analytic oracle is only defined for the named transports")
        if self.transport == "shear":
            return analytic_shear(mix, shape, self.T, self.D)
        if self.transport == "rotation":
            return analytic_rotation(mix, shape, self.T, self.D)
        if self.transport == "shear3d":
            return analytic_shear3d(mix, shape, self.T, self.D)
        if self.transport == "none":
            spread = GaussianMixture(mix.centers, spread_sigma(mix.sigma, self.D, self.T), mix.normalized)
            return sample_initial(spread, shape)
        raise ConfigError(f"no analytic oracle for transport {self.transport!r}; use oracle = fd")


# --------------------------------------------------------------------------
# velocity expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub}


def _linear(node: ast.AST, L: int, labels: tuple[str, ...]) -> tuple[float, dict[str, float]]:
    """Evaluate ``node`` as const + Σ coeff·axis; rejects anything non-linear."""
    if isinstance(node, ast.Expression):
        return _linear(node.body, L, labels)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value), {}
    if isinstance(node, ast.Name):
        if node.id == "L":
            return float(L), {}
        if node.id in labels:
            return 0.0, {node.id: 1.0}
        raise ConfigError(f"unknown name {node.id!r} in velocity expression")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        c, t = _linear(node.operand, L, labels)
        s = -1.0 if isinstance(node.op, ast.USub) else 1.0
        return s * c, {k: s * v for k, v in t.items()}
    if isinstance(node, ast.BinOp):
        a, ta = _linear(node.left, L, labels)
        b, tb = _linear(node.right, L, labels)
        if type(node.op) in _BINOPS:
            f = _BINOPS[type(node.op)]
            keys = set(ta) | set(tb)
            return f(a, b), {k: f(ta.get(k, 0.0), tb.get(k, 0.0)) for k in keys}
        if isinstance(node.op, ast.Mult):
            if ta and tb:
                raise ConfigError("velocity must be linear in the coordinates")
            if tb:
                a, ta, b, tb = b, tb, a, ta
            return a * b, {k: v * b for k, v in ta.items()}
        if isinstance(node.op, ast.Div):
            if tb:
                raise ConfigError("cannot divide by a coordinate")
            if b == 0:
                raise ConfigError("division by zero in velocity expression")
            return a / b, {k: v / b for k, v in ta.items()}
    raise ConfigError(f"unsupported velocity expression: {ast.dump(node)}")


def parse_velocity(expr: str, L: int, labels: tuple[str, ...] = AXIS_LABELS) -> AxisTransport:
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad velocity expression {expr!r}: {exc.msg}") from None
    const, terms = _linear(tree, L, labels)
    terms = {k: v for k, v in terms.items() if v != 0.0}
    if len(terms) > 1:
        raise ConfigError(f"velocity {expr!r} depends on more than one coordinate")
    if not terms:
        return AxisTransport(constant=const)
    (axis, scale), = terms.items()
    return AxisTransport(constant=const, control=axis, scale=scale)


# --------------------------------------------------------------------------
# parsing


_CONVERT = {
    "n": _ints, "n_p": int, "R": float, "transport": str.strip, "D": float, "dt": float, "T": float,
    "dts": _floats, "initial": str.strip, "sigma_frac": _frac, "offset_frac": _frac, "drop_cv1": _bool,
    "seed": int, "shots": int, "eps_cut": float, "sg_window": int, "sg_order": int, "oracle": str.strip,
    "out_dir": str.strip, "max_qubits": int, "long": _bool, "sweep_n_alpha": _ints, "sweep_n_p": _ints,
    "gate_transport": float, "name": str.strip,
}


def parse_pairs(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key] = value
    return out


def apply_pairs(base: ExperimentConfig, pairs: dict[str, str]) -> ExperimentConfig:
    kw: dict = {}
    velocity = dict(base.velocity)
    for key, value in pairs.items():
        if key in ("v_x", "v_y", "v_z"):
            velocity[key[2]] = value
            continue
        if key not in _CONVERT:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            kw[key] = _CONVERT[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    if velocity:
        kw["velocity"] = tuple(sorted(velocity.items()))
    return replace(base, **kw)


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return apply_pairs(base or ExperimentConfig(), parse_pairs(text))


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, base)


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        if f.name == "velocity":
            lines += [f"v_{k} = {e}" for k, e in v]
            continue
        if v is None:
            continue
        if isinstance(v, tuple):
            v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, bool):
            v = str(v).lower()
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# presets

_PRESET_TEXT = {
    # 1024² shear, e_0.5 / e_0.1 / e_0.02 reference errors
    "fig3-shear": """
        n = 10,10
        n_p = 1
        R = 4
        transport = shear
        initial = single
        sigma_frac = 1/4
        T = 128
        dt = 0.1
        dts = 0.5,0.1,0.02
        long = true
    """,
    "fig3-rotation": """
        n = 10,10
        n_p = 1
        R = 4
        transport = rotation
        initial = corners
        offset_frac = 1/4
        sigma_frac = 1/16
        T = 128
        dt = 0.1
        dts = 0.5,0.1,0.02
        long = true
    """,
    "fig4-advdiff-2d": """
        n = 10,10
        n_p = 3
        R = 4
        transport = shear
        D = 1
        initial = single
        sigma_frac = 1/8
        T = 128
        dt = 0.2
        long = true
    """,
    "fig5-3dshear": """
        n = 9,9,9
        n_p = 3
        R = 4
        transport = shear3d
        D = 1
        initial = single
        sigma_frac = 1/8
        T = 64
        dt = 0.1
        max_qubits = 30
        long = true
    """,
    "hw-16q": """
        n = 8,8
        n_p = 2
        R = 8
        transport = hardware
        initial = corners
        offset_frac = 1/4
        sigma_frac = 1/8
        T = 40
        dt = 1
        drop_cv1 = true
        shots = 100000
        eps_cut = 1e-5
        oracle = fd
    """,
    "hw-advdiff": """
        n = 8,8
        n_p = 3
        R = 8
        transport = hardware
        D = 1
        initial = corners
        offset_frac = 1/4
        sigma_frac = 1/8
        T = 40
        dt = 1
        oracle = fd
    """,
    # desk-scale versions of the above
    "desk-shear": """
        n = 6,6
        n_p = 1
        R = 4
        transport = shear
        initial = single
        sigma_frac = 1/4
        T = 8
        dt = 0.1
        dts = 0.5,0.1,0.02
    """,
    "desk-rotation": """
        n = 6,6
        n_p = 1
        R = 4
        transport = rotation
        initial = corners
        offset_frac = 1/4
        sigma_frac = 1/16
        T = 8
        dt = 0.1
        dts = 0.5,0.1,0.02
    """,
    "desk-diffusion": """
        n = 8,8
        n_p = 3
        R = 0.1
        transport = none
        D = 1
        initial = single
        sigma_frac = 1/8
        T = 32
        dt = 0.2
    """,
    "desk-3dshear": """
        n = 6,6,6
        n_p = 3
        R = 2
        transport = shear3d
        D = 1
        initial = single
        sigma_frac = 1/8
        T = 16
        dt = 0.2
        dts = 0.4,0.2
    """,
    "desk-gates": """
        n = 4
        n_p = 1
        transport = custom
        v_x = 1
        sweep_n_alpha = 3,4,5,6,7,8
        sweep_n_p = 1,2,3
    """,
}

PRESETS: dict[str, ExperimentConfig] = {
    name: parse_config(text, ExperimentConfig(name=name)) for name, text in _PRESET_TEXT.items()
}


def preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None


# seconds per amplitude per axis sweep, measured on one core with fused blocks
_SECONDS_PER_AMP_AXIS = 3e-7


def estimate(cfg: ExperimentConfig) -> tuple[float, int, float]:
    """(bytes of state memory, step count, rough wall seconds) for the run."""
    n_q = cfg.grid().n_qubits
    steps = cfg.n_steps()
    # state vector plus one scratch copy for recovery
    mem = 2 * 16.0 * 2 ** n_q
    seconds = steps * len(cfg.n) * 2.0 ** n_q * _SECONDS_PER_AMP_AXIS
    return mem, steps, seconds


def describe_estimate(cfg: ExperimentConfig) -> str:
    mem, steps, seconds = estimate(cfg)
    return (f"estimate for {cfg.name}: {cfg.grid().n_qubits} qubits, ~{mem / 2 ** 30:.2f} GiB state memory, "
            f"{steps} steps, ~{seconds / 60:.0f} min on one core")
