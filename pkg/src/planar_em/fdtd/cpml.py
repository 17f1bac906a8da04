"""Convolutional PML (CFS-CPML) grading and recursive-convolution
coefficients.

Profiles are polynomial in the depth into the layer, measured from the
interior interface (zero there) to the outer PEC wall:

    sigma(r) = sigma_max * r^m
    kappa(r) = 1 + (kappa_max - 1) * r^m
    alpha(r) = alpha_max * (1 - r)

with ``sigma_max = sigma_scale * 0.8 (m + 1) / (eta0 * d)`` for cell size d.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import epsilon_0, mu_0

__all__ = ["CpmlParams", "AxisCoefficients", "cpml_coefficients", "cpml_axis"]

ETA0 = float(np.sqrt(mu_0 / epsilon_0))


@dataclass(frozen=True)
class CpmlParams:
    cells: int = 10
    order: float = 3.0
    sigma_scale: float = 0.8
    kappa_max: float = 5.0
    alpha_max: float = 0.02

    def __post_init__(self):
        if self.cells < 6:
            raise ValueError(f"CPML needs at least 6 cells, got {self.cells}")
        if self.order <= 0 or self.kappa_max < 1 or self.alpha_max < 0 or self.sigma_scale <= 0:
            raise ValueError("invalid CPML profile parameters")

    def sigma_max(self, d: float) -> float:
        return self.sigma_scale * 0.8 * (self.order + 1) / (ETA0 * d)


@dataclass
class AxisCoefficients:
    """Per-axis CPML data for an axis of ``n`` cells.

    ``inv_e``/``inv_h`` are 1/(kappa d) at integer nodes (n+1) and half
    nodes (n).  ``e_idx``/``h_idx`` list the positions where the
    convolution is active, with matching ``b``/``c`` coefficients.
    """

    inv_e: np.ndarray
    inv_h: np.ndarray
    e_idx: np.ndarray
    e_b: np.ndarray
    e_c: np.ndarray
    h_idx: np.ndarray
    h_b: np.ndarray
    h_c: np.ndarray
    sigma_e: np.ndarray
    sigma_h: np.ndarray


def _depth(pos, n, p):
    """Normalized depth into the PML for positions in cell units."""
    lo = np.clip((p - pos) / p, 0.0, None)
    hi = np.clip((pos - (n - p)) / p, 0.0, None)
    return np.maximum(lo, hi)


def cpml_axis(n: int, d: float, dt: float, params: CpmlParams | None, dtype=np.float32) -> AxisCoefficients:
    """Coefficients along one axis of ``n`` cells of size ``d`` metres.

    ``params=None`` gives a plain axis (kappa = 1, no convolution).
    """
    nodes = np.arange(n + 1, dtype=float)
    halves = np.arange(n, dtype=float) + 0.5
    if params is None:
        empty_i = np.zeros(0, dtype=np.int64)
        empty_f = np.zeros(0, dtype=dtype)
        return AxisCoefficients(np.full(n + 1, 1 / d, dtype), np.full(n, 1 / d, dtype),
                                empty_i, empty_f, empty_f, empty_i, empty_f, empty_f,
                                np.zeros(n + 1), np.zeros(n))
    p = params.cells
    if 2 * p >= n:
        raise ValueError(f"axis of {n} cells cannot hold two {p}-cell PMLs")
    smax = params.sigma_max(d)

    def profile(pos):
        r = _depth(pos, n, p)
        inside = r > 0
        rm = r ** params.order
        sigma = smax * rm
        kappa = 1 + (params.kappa_max - 1) * rm
        alpha = np.where(inside, params.alpha_max * (1 - r), 0.0)
        b = np.exp(-(sigma / kappa + alpha) * dt / epsilon_0)
        denom = sigma * kappa + kappa ** 2 * alpha
        c = np.where(denom > 0, sigma / np.where(denom > 0, denom, 1.0) * (b - 1), 0.0)
        return sigma, kappa, b, c, inside

    se, ke, be, ce, ine = profile(nodes)
    sh, kh, bh, ch, inh = profile(halves)
    # outer wall nodes carry PEC; no convolution needed there
    ine[0] = ine[-1] = False
    ei = np.nonzero(ine)[0]
    hi = np.nonzero(inh)[0]
    return AxisCoefficients(
        inv_e=(1 / (ke * d)).astype(dtype), inv_h=(1 / (kh * d)).astype(dtype),
        e_idx=ei.astype(np.int64), e_b=be[ei].astype(dtype), e_c=ce[ei].astype(dtype),
        h_idx=hi.astype(np.int64), h_b=bh[hi].astype(dtype), h_c=ch[hi].astype(dtype),
        sigma_e=se, sigma_h=sh,
    )


def cpml_coefficients(shape, spacing_m, dt, params: CpmlParams | None = None):
    """Coefficients for all three axes of a grid of ``shape`` cells."""
    if params is not None and params.cells <= 0:
        raise ValueError("zero-thickness PML requested")
    params = params or CpmlParams()
    return tuple(cpml_axis(n, d, dt, params) for n, d in zip(shape, spacing_m))
