"""Statevector emulation of Schrödingerised advection-diffusion circuits."""

from .errors import (CapacityError, CFLError, ConfigError, ContractError, DegenerateProjectionError,
                     QAdvDiffError, ShapeError)
from .grid import AxisTransport, GridSpec, TransportSpec
from .oracle import GaussianMixture, fd_solve, rel_l2, sample_initial
from .schrodingerise import WarpSpec, prepare, recover
from .statevec import QuantumState, RegisterLayout
from .transport import assemble_step, cv1_identity_distance, evolve, evolve_state

__version__ = "0.1.0"

__all__ = [
    "AxisTransport", "CFLError", "CapacityError", "ConfigError", "ContractError",
    "DegenerateProjectionError", "GaussianMixture", "GridSpec", "QAdvDiffError", "QuantumState",
    "RegisterLayout", "ShapeError", "TransportSpec", "WarpSpec", "assemble_step",
    "cv1_identity_distance", "evolve", "evolve_state", "fd_solve", "prepare", "recover", "rel_l2",
    "sample_initial",
]
