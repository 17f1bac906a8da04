"""Surface-current maps on a metal plane from the tangential-H jump.

J_s = z x (H_above - H_below), i.e. Jx = -dHy and Jy = dHx.  The jump in
Hx sits on the Ey edges of the plane and the jump in Hy on the Ex edges, so
each component is kept only where its edge is flagged metal and then
averaged onto cell centres.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import write_volume

__all__ = ["NotOnMetalError", "SurfaceCurrentMap", "surface_current_map", "current_from_jump", "write_current_volume"]


class NotOnMetalError(ValueError):
    pass


@dataclass
class SurfaceCurrentMap:
    freq: float
    k: int
    x: np.ndarray        # cell-centre x (mm), (nx,)
    y: np.ndarray        # cell-centre y (mm), (ny,)
    jx: np.ndarray       # complex, (nx, ny), A/m (spectral units of the DFT)
    jy: np.ndarray

    @property
    def magnitude(self):
        return np.sqrt(np.abs(self.jx) ** 2 + np.abs(self.jy) ** 2)

    def value_at(self, x_mm: float, y_mm: float, radius_mm: float = 0.0) -> float:
        """Peak |J| within ``radius_mm`` of a point (nearest cell if 0)."""
        mag = self.magnitude
        if radius_mm <= 0:
            i = int(np.argmin(np.abs(self.x - x_mm)))
            j = int(np.argmin(np.abs(self.y - y_mm)))
            return float(mag[i, j])
        m = ((self.x[:, None] - x_mm) ** 2 + (self.y[None, :] - y_mm) ** 2) <= radius_mm ** 2
        return float(mag[m].max()) if m.any() else 0.0


def current_from_jump(dhx, dhy, flags_x, flags_y):
    """Cell-centred (Jx, Jy) from H jumps.

    dhx: (nx+1, ny) on Ey edges; dhy: (nx, ny+1) on Ex edges;
    flags_x: (nx, ny+1) Ex-edge metal flags; flags_y: (nx+1, ny).
    """
    jx_edge = np.where(flags_x, -dhy, 0)
    jy_edge = np.where(flags_y, dhx, 0)
    jx = 0.5 * (jx_edge[:, :-1] + jx_edge[:, 1:])
    jy = 0.5 * (jy_edge[:-1, :] + jy_edge[1:, :])
    return jx, jy


def surface_current_map(monitor, freq: float) -> SurfaceCurrentMap:
    if not getattr(monitor, "on_metal_layer", False):
        raise NotOnMetalError(f"monitor plane k={monitor.k} is not a metal layer")
    hx_a, hx_b, hy_a, hy_b = monitor.phasors(freq)
    fx, fy = monitor.flags
    jx, jy = current_from_jump(hx_a - hx_b, hy_a - hy_b, fx, fy)
    nx, ny = jx.shape
    dx, dy = monitor.spacing[0], monitor.spacing[1]
    x = monitor.origin[0] + (np.arange(nx) + 0.5) * dx
    y = monitor.origin[1] + (np.arange(ny) + 0.5) * dy
    return SurfaceCurrentMap(float(freq), monitor.k, x, y, jx, jy)


def write_current_volume(path, cmap: SurfaceCurrentMap, spacing, origin_z=0.0):
    """One-cell-thick volume holding |J|, Re/Im Jx, Re/Im Jy."""
    arrays = {
        "J_mag": cmap.magnitude[:, :, None],
        "Jx_re": cmap.jx.real[:, :, None], "Jx_im": cmap.jx.imag[:, :, None],
        "Jy_re": cmap.jy.real[:, :, None], "Jy_im": cmap.jy.imag[:, :, None],
    }
    origin = (cmap.x[0] - 0.5 * spacing[0], cmap.y[0] - 0.5 * spacing[1], origin_z)
    write_volume(path, arrays, spacing, origin, title=f"surface current {cmap.freq / 1e9:.4f} GHz")
