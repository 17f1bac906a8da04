"""Time-domain simulation and post-processing of planar microstrip antennas."""

__version__ = "0.1.0"
