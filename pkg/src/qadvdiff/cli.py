"""Command-line driver: ``qadvdiff {simulate,gatecount,sample,compare,sweep}``.

Exit codes: 0 ok, 2 configuration error, 3 capacity exceeded, 4 numerical
contract violated.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import ExperimentConfig, describe_estimate, load_config, preset
from .decompose import decompose, gate_report
from .errors import CapacityError, CFLError, ConfigError, ContractError, DegenerateProjectionError, ShapeError
from .grid import GridSpec, TransportSpec
from .oracle import fd_solve, rel_l2
from .postprocess import counts_to_field, savgol2d, threshold_mitigate, write_histogram
from .statevec import MAX_QUBITS_ENV, QuantumState, RegisterLayout, check_capacity, sample_counts
from .transport import Evolution, assemble_step, evolve_state

log = logging.getLogger("qadvdiff")

EXIT_CONFIG, EXIT_CAPACITY, EXIT_CONTRACT = 2, 3, 4


# --------------------------------------------------------------------------
# file output


def write_field_csv(path: Path, field: np.ndarray) -> None:
    """Header ``x,y[,z],value``; rows in row-major order of the [x, y, z] array."""
    field = np.asarray(field, dtype=float)
    idx = np.indices(field.shape).reshape(field.ndim, -1).T
    cols = ["x", "y", "z"][: field.ndim]
    data = np.column_stack([idx, field.ravel()])
    fmt = ["%d"] * field.ndim + ["%.17g"]
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=",".join(cols + ["value"]), comments="")


def read_field_csv(path: Path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    coords = data[:, :-1].astype(int)
    shape = tuple(coords.max(axis=0) + 1)
    out = np.zeros(shape)
    out[tuple(coords.T)] = data[:, -1]
    return out


def write_energy_csv(path: Path, energy: Sequence[float]) -> None:
    with open(path, "w") as fh:
        fh.write("step,energy\n")
        for k, e in enumerate(energy, 1):
            fh.write(f"{k},{e:.17g}\n")


def write_metrics(path: Path, metrics: dict) -> None:
    with open(path, "w") as fh:
        for k, v in metrics.items():
            fh.write(f"{k} = {v:.17g}\n" if isinstance(v, float) else f"{k} = {v}\n")


def _out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# experiments


def _run(cfg: ExperimentConfig, dt: float | None = None) -> Evolution:
    dt = cfg.dt if dt is None else dt
    return evolve_state(cfg.grid(), cfg.transport_spec(), cfg.D, dt, cfg.n_steps(dt),
                        cfg.initial_field(), drop_cv1=cfg.drop_cv1)


def step_gate_counts(cfg: ExperimentConfig) -> dict[str, int]:
    step = assemble_step(cfg.grid(), cfg.transport_spec(), cfg.D, cfg.dt, cfg.drop_cv1)
    return gate_report(decompose(step)).as_dict()


def run_simulate(cfg: ExperimentConfig) -> dict:
    out = _out(cfg)
    ev = _run(cfg)
    ref = cfg.reference()
    metrics: dict = {"preset": cfg.name, "n_qubits": cfg.grid().n_qubits, "n_steps": cfg.n_steps(),
                     "oracle": cfg.oracle_kind()}
    if ref is not None:
        metrics["rel_l2"] = rel_l2(ev.field, ref)
    metrics["projection_weight"] = ev.weight
    metrics["final_energy"] = ev.energy[-1]
    metrics.update(step_gate_counts(cfg))
    write_field_csv(out / "field.csv", ev.field)
    write_energy_csv(out / "energy.csv", ev.energy)
    write_metrics(out / "metrics.txt", metrics)
    # wall time lives apart so the other files stay byte-identical across runs
    write_metrics(out / "timing.txt", {"wall_seconds": ev.seconds})
    return metrics


def _advection_counts(n_alpha: int, n_p: int, v: float) -> dict[str, int]:
    grid = GridSpec((n_alpha,), n_p=n_p, R=4.0)
    step = assemble_step(grid, TransportSpec.constant(x=v), 0.0, 0.1 / max(1.0, abs(v)))
    return gate_report(decompose(step)).as_dict()


def _block_label(meta: dict) -> str:
    kind = meta.get("kind", "block")
    if kind == "controlled-power":
        return f"c-{meta.get('base', 'V')}"
    if "bit" in meta:
        return f"{kind}[{meta['bit']}]"
    return kind


def run_gatecount(cfg: ExperimentConfig) -> dict:
    out = _out(cfg)
    grid = cfg.grid()
    step = assemble_step(grid, cfg.transport_spec(), cfg.D, cfg.dt, cfg.drop_cv1)
    rows = []
    for axis_gate in step.gates:
        axis = axis_gate.body.metadata.get("axis", "?")
        for factor in axis_gate.body.gates:
            body = factor.body.widen(grid.n_qubits)
            r = gate_report(decompose(body))
            rows.append((axis, _block_label(factor.body.metadata), r))
    with open(out / "gatecount.csv", "w") as fh:
        fh.write("axis,block,one_qubit,cnot,depth\n")
        for axis, label, r in rows:
            fh.write(f"{axis},{label},{r.one_qubit_count},{r.cnot_count},{r.depth}\n")
    total = gate_report(decompose(step)).as_dict()

    n_alphas = list(cfg.sweep_n_alpha)
    sweep_np = list(cfg.sweep_n_p)
    with open(out / "gate_sweep.csv", "w") as fh:
        fh.write("n_alpha,n_p,one_qubit,cnot,depth\n")
        table = {}
        for n_p in sweep_np:
            for n_a in n_alphas:
                c = _advection_counts(n_a, n_p, cfg.gate_transport)
                table[n_a, n_p] = c["cnot_count"]
                fh.write(f"{n_a},{n_p},{c['one_qubit_count']},{c['cnot_count']},{c['depth']}\n")
    metrics: dict = {"n_qubits": grid.n_qubits}
    metrics.update({f"step_{k}": v for k, v in total.items()})
    if len(n_alphas) >= 2:
        base_np = sweep_np[0]
        counts = [table[n, base_np] for n in n_alphas]
        metrics["cnot_slope_vs_n_alpha"] = float(np.polyfit(np.log(n_alphas), np.log(counts), 1)[0])
    for a, b in zip(sweep_np, sweep_np[1:]):
        n_top = n_alphas[-1]
        metrics[f"cnot_ratio_np{a}_to_np{b}"] = table[n_top, b] / table[n_top, a]
    write_metrics(out / "gate_scaling.txt", metrics)
    return metrics


def statevector_field(ev: Evolution) -> np.ndarray:
    """|u| of the recovered state, unit ℓ₂: what shot sampling estimates."""
    a = np.abs(ev.complex_field)
    return a / np.linalg.norm(a)


def sample_field(ev: Evolution, shots: int, seed: int) -> dict[str, int]:
    layout = RegisterLayout.build([(lab, int(np.log2(n))) for lab, n in zip("xyz", ev.complex_field.shape)])
    state = QuantumState(layout.field_to_vector(ev.complex_field).astype(np.complex128), layout)
    return sample_counts(state, shots, seed)


def run_sample_mitigate(cfg: ExperimentConfig) -> dict:
    if cfg.shots < 1:
        raise ConfigError("shots must be positive")
    out = _out(cfg)
    ev = _run(cfg)
    truth = statevector_field(ev)
    hist = sample_field(ev, cfg.shots, cfg.seed)
    raw = counts_to_field(hist, truth.shape, cfg.shots)
    thresholded = threshold_mitigate(raw, cfg.eps_cut)
    mitigated = savgol2d(thresholded, cfg.sg_window, cfg.sg_order)
    mitigated = mitigated / np.linalg.norm(mitigated)
    write_histogram(out / "histogram.csv", hist)
    write_field_csv(out / "statevector.csv", truth)
    write_field_csv(out / "raw.csv", raw)
    write_field_csv(out / "mitigated.csv", mitigated)
    metrics = {
        "shots": cfg.shots, "seed": cfg.seed, "eps_cut": cfg.eps_cut,
        "rel_l2_raw": rel_l2(raw, truth),
        "rel_l2_thresholded": rel_l2(thresholded, truth),
        "rel_l2_mitigated": rel_l2(mitigated, truth),
        "nonzero_raw": int(np.count_nonzero(raw)),
        "nonzero_thresholded": int(np.count_nonzero(thresholded)),
    }
    write_metrics(out / "sample_metrics.txt", metrics)
    return metrics


def run_oracle_compare(cfg: ExperimentConfig) -> dict:
    out = _out(cfg)
    ev = _run(cfg)
    fields = {"quantum": ev.field}
    fd = fd_solve(cfg.grid(), cfg.transport_spec(), cfg.D, cfg.dt, cfg.n_steps(), cfg.initial_field())
    fields["fd"] = fd / np.linalg.norm(fd)
    if cfg.oracle_kind() == "analytic":
        fields["analytic"] = cfg.reference()
    names = list(fields)
    table = {}
    with open(out / "compare.csv", "w") as fh:
        fh.write("num,ref,rel_l2\n")
        for a in names:
            for b in names:
                if a != b:
                    table[f"{a}_vs_{b}"] = rel_l2(fields[a], fields[b])
                    fh.write(f"{a},{b},{table[f'{a}_vs_{b}']:.17g}\n")
    return table


def run_sweep(cfg: ExperimentConfig) -> dict:
    out = _out(cfg)
    dts = cfg.dts or (cfg.dt,)
    rows = {}
    for dt in dts:
        cfg.n_steps(dt)
    with open(out / "sweep.csv", "w") as fh:
        fh.write("dt,rel_l2,projection_weight\n")
        for dt in dts:
            ev = _run(cfg, dt)
            ref = cfg.reference(dt)
            e = rel_l2(ev.field, ref) if ref is not None else float("nan")
            rows[dt] = e
            fh.write(f"{dt!r},{e:.17g},{ev.weight:.17g}\n")
    return rows


COMMANDS = {
    "simulate": run_simulate,
    "gatecount": run_gatecount,
    "sample": run_sample_mitigate,
    "compare": run_oracle_compare,
    "sweep": run_sweep,
}


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qadvdiff", description="Emulated quantum advection-diffusion runs.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--preset", help="start from a shipped preset (config keys override it)")
    p.add_argument("--seed", type=int, help="override the sampling seed")
    p.add_argument("--out", help="override out_dir")
    p.add_argument("--allow-long", action="store_true", help="permit full-scale presets")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = preset(args.preset) if args.preset else ExperimentConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    if not args.preset and not args.config:
        raise ConfigError("give --config or --preset")
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out:
        cfg = replace(cfg, out_dir=args.out)
    return cfg.validate()


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if cfg.max_qubits is not None and not os.environ.get(MAX_QUBITS_ENV):
            os.environ[MAX_QUBITS_ENV] = str(cfg.max_qubits)
        if cfg.long:
            print(describe_estimate(cfg), file=sys.stderr)
            if not args.allow_long:
                raise ConfigError(f"preset {cfg.name!r} is full scale; pass --allow-long to run it")
        check_capacity(cfg.grid().n_qubits)
        start = time.perf_counter()
        result = COMMANDS[args.command](cfg)
        log.info("%s finished in %.1fs", args.command, time.perf_counter() - start)
    except (ConfigError, CFLError, ShapeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ContractError, DegenerateProjectionError) as exc:
        print(f"numerical contract violated: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    for k, v in result.items():
        print(f"{k} = {v:.6g}" if isinstance(v, float) else f"{k} = {v}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
