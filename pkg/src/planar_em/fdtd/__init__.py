"""Time-domain field solver."""

from .cpml import CpmlParams
from .excitation import GaussianPulse
from .monitors import FluxMonitor, NtffMonitor, SurfaceCurrentMonitor
from .solver import (
    InstabilityError,
    PortError,
    PortRecord,
    PortSpec,
    RunResult,
    SimConfig,
    Solver,
    TerminationWarning,
    courant_dt,
    resolve_ports,
    run,
)

__all__ = [
    "CpmlParams", "GaussianPulse", "FluxMonitor", "NtffMonitor", "SurfaceCurrentMonitor",
    "InstabilityError", "PortError", "PortRecord", "PortSpec", "RunResult", "SimConfig",
    "Solver", "TerminationWarning", "courant_dt", "resolve_ports", "run",
]
