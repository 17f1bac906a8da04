"""Frequency-domain post-processing of port records and monitor data."""

from .bands import BandReport, band_report, dip_frequency, isolation_at, matched_intervals
from .currents import NotOnMetalError, SurfaceCurrentMap, surface_current_map, write_current_volume
from .ecc import EccCurve, SingularEccError, ecc
from .ntff import FarFieldPattern, accepted_power, far_field, surface_power
from .sparams import ContractError, SParamMatrix, extract_sparams, mirror_run
from .ringdown import Mode, dominant_mode, fundamental_mode, natural_modes
from .spectra import OutOfBandError, dft, port_spectra
from .touchstone import read_s2p, write_s2p

__all__ = [
    "BandReport", "band_report", "dip_frequency", "isolation_at", "matched_intervals",
    "NotOnMetalError", "SurfaceCurrentMap", "surface_current_map", "write_current_volume",
    "EccCurve", "SingularEccError", "ecc",
    "FarFieldPattern", "accepted_power", "far_field", "surface_power",
    "ContractError", "SParamMatrix", "extract_sparams", "mirror_run",
    "Mode", "dominant_mode", "fundamental_mode", "natural_modes",
    "OutOfBandError", "dft", "port_spectra", "read_s2p", "write_s2p",
]
