"""Frequency-domain near-to-far-field transform over a closed box.

Equivalent currents on the box faces are J = n x H and M = -n x E.  With
the radiation vectors

    N = sum J exp(+j k r'.r) dS,   L = sum M exp(+j k r'.r) dS

the far-zone radiation intensity per polarization is

    U_theta = k^2 / (32 pi^2 eta) |L_phi + eta N_theta|^2
    U_phi   = k^2 / (32 pi^2 eta) |L_theta - eta N_phi|^2

Gain is ``4 pi U / P_acc`` with P_acc the power accepted at the driven port.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C0, epsilon_0, mu_0

__all__ = [
    "FarFieldPattern",
    "far_field",
    "radiation_vectors",
    "sphere_grid",
    "surface_power",
    "accepted_power",
    "pattern_csv_rows",
    "FARFIELD_CSV_HEADER",
]

ETA0 = math.sqrt(mu_0 / epsilon_0)
FARFIELD_CSV_HEADER = "freq_ghz,theta_deg,phi_deg,gain_theta_dbi,gain_phi_dbi,gain_total_dbi"


def _dbi(x):
    return 10 * np.log10(np.maximum(x, 1e-30))


@dataclass
class FarFieldPattern:
    freq: float
    theta: np.ndarray        # degrees, (nt,)
    phi: np.ndarray          # degrees, (np,)
    e_theta: np.ndarray      # r * E_theta without exp(-jkr), (nt, np)
    e_phi: np.ndarray
    u_theta: np.ndarray      # W/sr
    u_phi: np.ndarray
    accepted_power: float

    @property
    def radiated_power(self) -> float:
        return sphere_integral(self.u_theta + self.u_phi, self.theta, self.phi)

    @property
    def gain_theta(self):
        return 4 * np.pi * self.u_theta / self.accepted_power

    @property
    def gain_phi(self):
        return 4 * np.pi * self.u_phi / self.accepted_power

    @property
    def gain_total(self):
        return self.gain_theta + self.gain_phi

    def gain_dbi(self, pol="total"):
        return _dbi({"total": self.gain_total, "theta": self.gain_theta, "phi": self.gain_phi}[pol])

    @property
    def directivity(self):
        return 4 * np.pi * (self.u_theta + self.u_phi) / self.radiated_power

    def cut(self, phi_deg: float):
        """(theta, gain_theta, gain_phi, gain_total) in dBi along one phi plane."""
        j = int(np.argmin(np.abs((self.phi - phi_deg + 180) % 360 - 180)))
        return (self.theta, self.gain_dbi("theta")[:, j], self.gain_dbi("phi")[:, j],
                self.gain_dbi("total")[:, j])


def sphere_grid(step_deg: float = 2.0):
    if not (0 < step_deg <= 2.0 + 1e-12) or abs(180 / step_deg - round(180 / step_deg)) > 1e-9:
        raise ValueError("step must divide 180 and be at most 2 degrees")
    nt = int(round(180 / step_deg)) + 1
    theta = np.linspace(0, 180, nt)
    phi = np.arange(int(round(360 / step_deg))) * step_deg
    return theta, phi


def sphere_integral(u, theta_deg, phi_deg) -> float:
    """Integral of u(theta, phi) sin(theta) over the sphere (trapezoid in
    theta, periodic rectangle rule in phi)."""
    t = np.deg2rad(theta_deg)
    dphi = 2 * np.pi / len(phi_deg)
    ring = np.asarray(u).sum(axis=1) * dphi
    return float(np.trapezoid(ring * np.sin(t), t))


def radiation_vectors(surface, k: float, theta_deg, phi_deg, chunk: int = 64):
    """N and L in spherical components, each of shape (nt, np)."""
    t = np.deg2rad(np.asarray(theta_deg))[:, None]
    p = np.deg2rad(np.asarray(phi_deg))[None, :]
    st, ct, sp, cp = np.sin(t), np.cos(t), np.sin(p), np.cos(p)
    rhat = np.stack(np.broadcast_arrays(st * cp, st * sp, ct * np.ones_like(p)), -1).reshape(-1, 3)
    pts = np.concatenate([s[0] for s in surface])
    jw = np.concatenate([np.cross(s[2], s[4]) * s[1] for s in surface])
    mw = np.concatenate([-np.cross(s[2], s[3]) * s[1] for s in surface])
    nvec = np.zeros((rhat.shape[0], 3), dtype=complex)
    lvec = np.zeros_like(nvec)
    for s in range(0, rhat.shape[0], chunk):
        ph = np.exp(1j * k * (pts @ rhat[s:s + chunk].T))    # (npts, chunk)
        nvec[s:s + chunk] = ph.T @ jw
        lvec[s:s + chunk] = ph.T @ mw
    shape = (t.shape[0], p.shape[1])
    nx, ny, nz = (nvec[:, a].reshape(shape) for a in range(3))
    lx, ly, lz = (lvec[:, a].reshape(shape) for a in range(3))
    n_t = nx * ct * cp + ny * ct * sp - nz * st
    n_p = -nx * sp + ny * cp
    l_t = lx * ct * cp + ly * ct * sp - lz * st
    l_p = -lx * sp + ly * cp
    return n_t, n_p, l_t, l_p


def far_field(surface, freq: float, accepted: float, theta_deg=None, phi_deg=None,
              eta: float = ETA0, step_deg: float = 2.0) -> FarFieldPattern:
    """Pattern at ``freq`` from box data ``[(points, dS, normal, E, H), ...]``
    (as returned by the NTFF monitor)."""
    if accepted <= 0:
        raise ValueError("accepted power must be positive")
    if theta_deg is None or phi_deg is None:
        theta_deg, phi_deg = sphere_grid(step_deg)
    k = 2 * np.pi * freq / C0
    n_t, n_p, l_t, l_p = radiation_vectors(surface, k, theta_deg, phi_deg)
    a_t = l_p + eta * n_t
    a_p = l_t - eta * n_p
    kf = k ** 2 / (32 * np.pi ** 2 * eta)
    coef = k / (4 * np.pi)
    return FarFieldPattern(freq, np.asarray(theta_deg, float), np.asarray(phi_deg, float),
                           -1j * coef * a_t, 1j * coef * a_p,
                           kf * np.abs(a_t) ** 2, kf * np.abs(a_p) ** 2, float(accepted))


def surface_power(surface) -> float:
    """Outward time-average power 1/2 Re sum (E x H*) . n dS through the box."""
    return float(sum(0.5 * np.real(np.cross(s[3], np.conj(s[4])) @ s[2]).sum() * s[1]
                     for s in surface))


def accepted_power(v, i) -> float:
    """Time-average power 1/2 Re(V I*) flowing into the structure."""
    return float(0.5 * np.real(v * np.conj(i)))


def pattern_csv_rows(p: FarFieldPattern):
    gt, gp, g = p.gain_dbi("theta"), p.gain_dbi("phi"), p.gain_dbi("total")
    for a, th in enumerate(p.theta):
        for b, ph in enumerate(p.phi):
            yield (f"{p.freq / 1e9:.6f},{th:.3f},{ph:.3f},"
                   f"{gt[a, b]:.4f},{gp[a, b]:.4f},{g[a, b]:.4f}")
