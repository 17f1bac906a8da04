"""One-dimensional Yee line (Ex, Hy along z) sharing the 3-D CPML grading.

Used to check the update scheme against closed-form results: numerical
dispersion, normal-incidence reflection from a dielectric half-space and
the residual reflection of the absorbing layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C0, epsilon_0, mu_0

from .cpml import CpmlParams, cpml_axis
from .excitation import GaussianPulse

__all__ = [
    "Line1D",
    "fresnel_reflection",
    "yee_wavenumber",
    "measure_reflection",
    "measure_phase_velocity",
    "measure_pml_reflection",
]


@dataclass
class Line1D:
    """Ex nodes 0..n, Hy at half nodes; ``eps_r`` is per cell (length n)."""

    n: int
    dz: float
    eps_r: np.ndarray | None = None
    pml: CpmlParams | None = None
    courant: float = 0.99

    def __post_init__(self):
        if self.eps_r is None:
            self.eps_r = np.ones(self.n)
        self.eps_r = np.asarray(self.eps_r, dtype=float)
        if self.eps_r.shape != (self.n,):
            raise ValueError("eps_r must have one value per cell")
        self.dt = self.courant * self.dz / C0

    def simulate(self, source: GaussianPulse, src_node: int, probes, steps: int):
        """Soft current source at ``src_node``; returns Ex(t) at ``probes``
        sampled at (n + 1) dt, shape (steps, len(probes))."""
        n, dz, dt = self.n, self.dz, self.dt
        ax = cpml_axis(n, dz, dt, self.pml, np.float64)
        eps_node = np.empty(n + 1)
        eps_node[1:-1] = 0.5 * (self.eps_r[1:] + self.eps_r[:-1])
        eps_node[0], eps_node[-1] = self.eps_r[0], self.eps_r[-1]
        cb = dt / (epsilon_0 * eps_node)
        ch = dt / mu_0
        ex = np.zeros(n + 1)
        hy = np.zeros(n)
        psi_e = np.zeros(ax.e_idx.size)
        psi_h = np.zeros(ax.h_idx.size)
        ei, hi = ax.e_idx, ax.h_idx
        probes = np.asarray(probes, dtype=int)
        out = np.empty((steps, probes.size))
        inv_d = 1.0 / dz
        for s in range(steps):
            de = ex[1:] - ex[:-1]
            hy -= ch * de * ax.inv_h
            if hi.size:
                psi_h[:] = ax.h_b * psi_h + ax.h_c * de[hi] * inv_d
                hy[hi] -= ch * psi_h
            dh = hy[1:] - hy[:-1]
            ex[1:-1] -= cb[1:-1] * dh * ax.inv_e[1:-1]
            if ei.size:
                psi_e[:] = ax.e_b * psi_e + ax.e_c * dh[ei - 1] * inv_d
                ex[ei] -= cb[ei] * psi_e
            ex[src_node] += float(source((s + 0.5) * dt))
            out[s] = ex[probes]
        return out


def fresnel_reflection(eps1: float, eps2: float) -> float:
    """Normal-incidence amplitude reflection from medium 1 into medium 2."""
    n1, n2 = math.sqrt(eps1), math.sqrt(eps2)
    return (n1 - n2) / (n1 + n2)


def yee_wavenumber(freq, dz: float, dt: float, eps_r: float = 1.0):
    """Numerical wavenumber of the 1-D Yee scheme."""
    v = C0 / math.sqrt(eps_r)
    arg = dz / (v * dt) * np.sin(np.pi * np.asarray(freq) * dt)
    return 2.0 / dz * np.arcsin(arg)


def _dft(x, freqs, dt):
    t = (np.arange(x.shape[0]) + 1) * dt
    return np.exp(-2j * np.pi * np.outer(freqs, t)) @ x * dt


def measure_reflection(eps2: float, freqs, dz=1e-3, cells=600, pml=None, pulse=None):
    """|R(f)| of a vacuum/dielectric interface at the line centre.

    The incident wave is removed by subtracting an all-vacuum run.
    """
    pml = pml or CpmlParams(cells=20)
    pulse = pulse or GaussianPulse(f_center=4.5e9, half_bandwidth=3e9)
    eps = np.ones(cells)
    mid = cells // 2
    eps[mid:] = eps2
    src, probe = pml.cells + 20, pml.cells + 60
    steps = int(4 * cells / 0.99 + pulse.duration / (0.99 * dz / C0))
    ref_line = Line1D(cells, dz, None, pml)
    ref = ref_line.simulate(pulse, src, [probe], steps)[:, 0]
    tot = Line1D(cells, dz, eps, pml).simulate(pulse, src, [probe], steps)[:, 0]
    dt = ref_line.dt
    return np.abs(_dft(tot - ref, freqs, dt)) / np.abs(_dft(ref, freqs, dt))


def measure_phase_velocity(freqs, dz=1e-3, cells=800, separation=200, pml=None, pulse=None):
    """Phase velocity from the phase delay between two probes."""
    pml = pml or CpmlParams(cells=20)
    pulse = pulse or GaussianPulse(f_center=4.5e9, half_bandwidth=3e9)
    line = Line1D(cells, dz, None, pml)
    p1 = pml.cells + 40
    p2 = p1 + separation
    steps = int(2 * cells / 0.99 + pulse.duration / line.dt)
    out = line.simulate(pulse, pml.cells + 10, [p1, p2], steps)
    x1, x2 = _dft(out[:, 0], freqs, line.dt), _dft(out[:, 1], freqs, line.dt)
    phase = -np.unwrap(np.angle(x2 / x1))
    # unwrap from the analytic estimate so whole-period ambiguity resolves
    approx = 2 * np.pi * np.asarray(freqs) * separation * dz / C0
    phase += 2 * np.pi * np.round((approx - phase) / (2 * np.pi))
    k = phase / (separation * dz)
    return 2 * np.pi * np.asarray(freqs) / k, line.dt


def measure_pml_reflection(freqs, dz=1e-3, pml=None, pulse=None, margin=40):
    """Reflection (linear) from a CPML-terminated end, isolated by comparing
    against a line long enough that its far end is never reached."""
    pml = pml or CpmlParams()
    pulse = pulse or GaussianPulse(f_center=4.5e9, half_bandwidth=3e9)
    short = 2 * pml.cells + 2 * margin
    src = pml.cells + margin // 2
    probe = pml.cells + margin
    line = Line1D(short, dz, None, pml)
    steps = int(pulse.duration / line.dt + 3 * short / 0.99)
    long_n = short + steps + 10
    got = line.simulate(pulse, src, [probe], steps)[:, 0]
    ref = Line1D(long_n, dz, None, pml).simulate(pulse, src, [probe], steps)[:, 0]
    inc = _dft(ref, freqs, line.dt)
    return np.abs(_dft(got - ref, freqs, line.dt)) / np.abs(inc)
