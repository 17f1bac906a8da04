"""Source waveforms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["GaussianPulse"]

_LN10 = math.log(10.0)


@dataclass(frozen=True)
class GaussianPulse:
    """Sine-modulated Gaussian voltage pulse.

    ``v(t) = amplitude * sin(2 pi f0 (t - t0)) * exp(-(t - t0)^2 / (2 tau^2))``

    The spectrum is a Gaussian around ``f_center`` that has dropped by
    ``edge_db`` at ``f_center +/- half_bandwidth``.  Odd symmetry about
    ``t0`` gives exactly zero DC content.
    """

    f_center: float = 4.5e9
    half_bandwidth: float = 3.0e9
    amplitude: float = 1.0
    edge_db: float = 20.0
    delay_widths: float = 6.0

    def __post_init__(self):
        if not (self.f_center > 0 and self.half_bandwidth > 0):
            raise ValueError("pulse centre and bandwidth must be positive")
        if self.half_bandwidth >= self.f_center:
            raise ValueError("lower band edge must stay above DC")

    @property
    def sigma_f(self) -> float:
        # amplitude ratio 10^(-edge_db/20) at the edge
        return self.half_bandwidth / math.sqrt(2.0 * _LN10 * self.edge_db / 20.0)

    @property
    def tau(self) -> float:
        return 1.0 / (2.0 * math.pi * self.sigma_f)

    @property
    def t0(self) -> float:
        return self.delay_widths * self.tau

    @property
    def duration(self) -> float:
        return 2.0 * self.t0

    @property
    def band(self):
        return (self.f_center - self.half_bandwidth, self.f_center + self.half_bandwidth)

    def __call__(self, t):
        s = (np.asarray(t, dtype=float) - self.t0)
        return self.amplitude * np.sin(2 * np.pi * self.f_center * s) * np.exp(-0.5 * (s / self.tau) ** 2)

    def spectrum(self, f):
        """Analytic Fourier transform magnitude, same convention as the port DFT."""
        f = np.asarray(f, dtype=float)
        g = lambda d: np.exp(-0.5 * (d / self.sigma_f) ** 2)
        return self.amplitude * self.tau * math.sqrt(2 * math.pi) / 2 * np.abs(
            g(f - self.f_center) - g(f + self.f_center))

    def relative_db(self, f):
        peak = self.spectrum(self.f_center)
        return 20 * np.log10(np.maximum(self.spectrum(f) / peak, 1e-300))
