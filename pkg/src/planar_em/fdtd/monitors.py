"""Field monitors: running-DFT surface-current planes, near-to-far-field
boxes and a time-domain Poynting flux box.

All phasors use the same transform as the port records,
``X(f) = sum_n x(t_n) exp(-j 2 pi f t_n) * dt_sample`` with E sampled at
``(n + 1) dt`` and H at ``(n + 1/2) dt`` after step n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import dft_accumulate

__all__ = [
    "SurfaceCurrentMonitor",
    "NtffMonitor",
    "FluxMonitor",
    "Face",
    "box_faces",
    "face_fields",
]


@dataclass(frozen=True)
class Face:
    """One side of a node-aligned box; ``lo``/``hi`` are node bounds of the box."""

    axis: int
    side: int
    lo: tuple
    hi: tuple

    @property
    def plane(self) -> int:
        return self.hi[self.axis] if self.side > 0 else self.lo[self.axis]

    @property
    def tangential(self):
        return tuple(a for a in range(3) if a != self.axis)


def box_faces(lo, hi):
    return [Face(a, s, tuple(lo), tuple(hi)) for a in range(3) for s in (-1, 1)]


def _avg(a, axis):
    s0 = [slice(None)] * a.ndim
    s1 = [slice(None)] * a.ndim
    s0[axis] = slice(None, -1)
    s1[axis] = slice(1, None)
    return 0.5 * (a[tuple(s0)].astype(np.float64) + a[tuple(s1)])


def face_fields(fields6, face: Face):
    """Tangential E and H co-located at the face-cell centres.

    Returns two arrays of shape (3, nu, nv); the normal component is zero.
    """
    ex, ey, ez, hx, hy, hz = fields6
    n0 = face.plane
    (i0, j0, k0), (i1, j1, k1) = face.lo, face.hi
    if face.axis == 0:
        shape = (3, j1 - j0, k1 - k0)
        e = np.zeros(shape)
        h = np.zeros(shape)
        e[1] = _avg(ey[n0, j0:j1, k0:k1 + 1], 1)
        e[2] = _avg(ez[n0, j0:j1 + 1, k0:k1], 0)
        h[1] = _avg(_avg(hy[n0 - 1:n0 + 1, j0:j1 + 1, k0:k1], 0)[0], 0)
        h[2] = _avg(_avg(hz[n0 - 1:n0 + 1, j0:j1, k0:k1 + 1], 0)[0], 1)
    elif face.axis == 1:
        shape = (3, i1 - i0, k1 - k0)
        e = np.zeros(shape)
        h = np.zeros(shape)
        e[0] = _avg(ex[i0:i1, n0, k0:k1 + 1], 1)
        e[2] = _avg(ez[i0:i1 + 1, n0, k0:k1], 0)
        h[0] = _avg(_avg(hx[i0:i1 + 1, n0 - 1:n0 + 1, k0:k1], 1)[:, 0], 0)
        h[2] = _avg(_avg(hz[i0:i1, n0 - 1:n0 + 1, k0:k1 + 1], 1)[:, 0], 1)
    else:
        shape = (3, i1 - i0, j1 - j0)
        e = np.zeros(shape)
        h = np.zeros(shape)
        e[0] = _avg(ex[i0:i1, j0:j1 + 1, n0], 1)
        e[1] = _avg(ey[i0:i1 + 1, j0:j1, n0], 0)
        h[0] = _avg(_avg(hx[i0:i1 + 1, j0:j1, n0 - 1:n0 + 1], 2)[:, :, 0], 0)
        h[1] = _avg(_avg(hy[i0:i1, j0:j1 + 1, n0 - 1:n0 + 1], 2)[:, :, 0], 1)
    return e, h


def face_points(face: Face, node_coords):
    """Cell-centre coordinates (metres) of a face, shape (nu, nv, 3), and dS."""
    u, v = face.tangential
    cu = node_coords[u][face.lo[u]:face.hi[u] + 1]
    cv = node_coords[v][face.lo[v]:face.hi[v] + 1]
    mu = 0.5 * (cu[:-1] + cu[1:])
    mv = 0.5 * (cv[:-1] + cv[1:])
    pts = np.zeros((mu.size, mv.size, 3))
    pts[..., u] = mu[:, None]
    pts[..., v] = mv[None, :]
    pts[..., face.axis] = node_coords[face.axis][face.plane]
    ds = (cu[1] - cu[0]) * (cv[1] - cv[0])
    return pts, ds


class _DftMonitor:
    """Shared stride/phase bookkeeping for running-DFT monitors."""

    def __init__(self, freqs, stride=None):
        self.freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
        if self.freqs.size == 0:
            raise ValueError("monitor needs at least one frequency")
        self._stride_req = stride
        self.stride = 1
        self.dt = None

    def _setup_time(self, dt):
        self.dt = dt
        if self._stride_req is None:
            # >= 6 samples per period at the highest monitored frequency
            self.stride = max(1, int(1.0 / (6.0 * self.freqs.max() * dt)))
        else:
            self.stride = int(self._stride_req)

    def _phase(self, t):
        w = -2j * np.pi * self.freqs * t
        ph = np.exp(w) * (self.dt * self.stride)
        return np.ascontiguousarray(ph.real), np.ascontiguousarray(ph.imag)


class SurfaceCurrentMonitor(_DftMonitor):
    """Running DFT of tangential H just above and below a metal plane.

    ``layer`` is a layer name of the layout (``TOP_METAL``, ``GROUND``...)
    or an explicit node index ``k``.
    """

    kind = "surface"

    def __init__(self, freqs, layer="TOP_METAL", stride=None):
        super().__init__(freqs, stride)
        self.layer = layer
        self.k = None
        self.on_metal_layer = False

    def attach(self, solver):
        grid = solver.grid
        if isinstance(self.layer, str):
            if self.layer not in grid.layer_planes:
                raise ValueError(f"unknown layer {self.layer!r}")
            self.k = grid.layer_planes[self.layer]
        else:
            self.k = int(self.layer)
        self.on_metal_layer = self.k in grid.layer_planes.values()
        self._setup_time(solver.dt)
        nx, ny, _ = grid.shape
        nf = self.freqs.size
        self.hx = np.zeros((2, nf, (nx + 1) * ny), dtype=np.complex128)
        self.hy = np.zeros((2, nf, nx * (ny + 1)), dtype=np.complex128)
        self.flags = (grid.pec_x[:, :, self.k].copy(), grid.pec_y[:, :, self.k].copy())
        self.spacing = grid.spacing
        self.origin = grid.origin

    def sample(self, solver, n):
        if n % self.stride:
            return
        re, im = self._phase((n + 0.5) * solver.dt)
        k = self.k
        for s, kk in enumerate((k, k - 1)):
            dft_accumulate(self.hx[s], np.ascontiguousarray(solver.hx[:, :, kk]).ravel(), re, im)
            dft_accumulate(self.hy[s], np.ascontiguousarray(solver.hy[:, :, kk]).ravel(), re, im)

    def phasors(self, freq):
        """(hx_above, hx_below, hy_above, hy_below) at ``freq`` as 2-D arrays."""
        idx = np.nonzero(np.isclose(self.freqs, freq, rtol=1e-9, atol=0))[0]
        if idx.size == 0:
            raise KeyError(f"frequency {freq} Hz not monitored")
        f = idx[0]
        nx, ny = self.flags[1].shape[0] - 1, self.flags[0].shape[1] - 1
        hx = self.hx[:, f].reshape(2, nx + 1, ny)
        hy = self.hy[:, f].reshape(2, nx, ny + 1)
        return hx[0], hx[1], hy[0], hy[1]


class NtffMonitor(_DftMonitor):
    """Running DFT of tangential E/H on a closed box.

    ``inset`` is the gap (in cells) between the box and the PML.
    """

    kind = "ntff"

    def __init__(self, freqs, inset=3, stride=None, box=None):
        super().__init__(freqs, stride)
        self.inset = inset
        self.box = box

    def attach(self, solver):
        grid = solver.grid
        p = grid.pml_cells + self.inset
        if self.box is None:
            lo = (p, p, p)
            hi = tuple(n - p for n in grid.shape)
        else:
            lo, hi = self.box
        self.lo, self.hi = tuple(lo), tuple(hi)
        self._check_box(grid)
        self._setup_time(solver.dt)
        self.faces = box_faces(self.lo, self.hi)
        nf = self.freqs.size
        self.e_acc = []
        self.h_acc = []
        for f in self.faces:
            u, v = f.tangential
            npts = (self.hi[u] - self.lo[u]) * (self.hi[v] - self.lo[v])
            self.e_acc.append(np.zeros((nf, 3 * npts), dtype=np.complex128))
            self.h_acc.append(np.zeros((nf, 3 * npts), dtype=np.complex128))
        dx, dy, dz = grid.spacing_m
        ox, oy, oz = (o * 1e-3 for o in grid.origin)
        nx, ny, nz = grid.shape
        self.node_coords = (ox + dx * np.arange(nx + 1), oy + dy * np.arange(ny + 1),
                            oz + dz * np.arange(nz + 1))

    def _check_box(self, grid):
        p = grid.pml_cells
        for a in range(3):
            if not (p < self.lo[a] < self.hi[a] < grid.shape[a] - p):
                raise ValueError("NTFF box must lie strictly inside the non-PML region")
        metal = [grid.pec_x, grid.pec_y, grid.pec_z]
        for m in metal:
            idx = np.nonzero(m)
            if idx[0].size == 0:
                continue
            for a in range(3):
                if idx[a].min() <= self.lo[a] or idx[a].max() >= self.hi[a]:
                    raise ValueError("NTFF box must enclose all metal")

    def sample(self, solver, n):
        if n % self.stride:
            return
        ere, eim = self._phase((n + 1.0) * solver.dt)
        hre, him = self._phase((n + 0.5) * solver.dt)
        f6 = solver.fields
        for f, ea, ha in zip(self.faces, self.e_acc, self.h_acc):
            e, h = face_fields(f6, f)
            dft_accumulate(ea, e.ravel(), ere, eim)
            dft_accumulate(ha, h.ravel(), hre, him)

    def surface_data(self, freq):
        """List of (points, dS, normal, E, H) per face at ``freq``."""
        idx = np.nonzero(np.isclose(self.freqs, freq, rtol=1e-9, atol=0))[0]
        if idx.size == 0:
            raise KeyError(f"frequency {freq} Hz not monitored")
        fi = idx[0]
        out = []
        for f, ea, ha in zip(self.faces, self.e_acc, self.h_acc):
            pts, ds = face_points(f, self.node_coords)
            nu, nv = pts.shape[:2]
            e = ea[fi].reshape(3, nu, nv)
            h = ha[fi].reshape(3, nu, nv)
            normal = np.zeros(3)
            normal[f.axis] = f.side
            out.append((pts.reshape(-1, 3), ds, normal,
                        e.reshape(3, -1).T.copy(), h.reshape(3, -1).T.copy()))
        return out


class FluxMonitor:
    """Time-integrated outward Poynting flux through a node-aligned box.

    E is averaged over steps n and n+1 so that it sits at the same time as
    H^(n+1/2).
    """

    kind = "flux"

    def __init__(self, lo=None, hi=None, inset=3):
        self.lo, self.hi, self.inset = lo, hi, inset
        self.energy = 0.0
        self.power = []

    def attach(self, solver):
        grid = solver.grid
        p = grid.pml_cells + self.inset
        if self.lo is None:
            self.lo = (p, p, p)
            self.hi = tuple(n - p for n in grid.shape)
        self.faces = box_faces(self.lo, self.hi)
        self._prev_e = [np.zeros_like(face_fields(solver.fields, f)[0]) for f in self.faces]
        dx, dy, dz = grid.spacing_m
        d = (dx, dy, dz)
        self._ds = [d[f.tangential[0]] * d[f.tangential[1]] for f in self.faces]
        self.dt = solver.dt

    def sample(self, solver, n):
        total = 0.0
        for idx, f in enumerate(self.faces):
            e, h = face_fields(solver.fields, f)
            e_mid = 0.5 * (e + self._prev_e[idx])
            self._prev_e[idx] = e
            s = np.cross(e_mid, h, axis=0)[f.axis]
            total += f.side * float(s.sum()) * self._ds[idx]
        self.power.append(total)
        self.energy += total * self.dt
