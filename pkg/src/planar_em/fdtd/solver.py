"""Yee-scheme time-domain solver with CPML boundaries and lumped ports.

One call to :meth:`Solver.step` advances H by half a step and then E by a
full step.  Each lumped port is a column of vertical E-edges spanning the
substrate with a series resistor (and, on the excited port, a voltage
source) distributed evenly over the column.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.constants import c as C0, epsilon_0, mu_0

from ..grid import MaterialGrid
from . import kernels
from .cpml import CpmlParams, cpml_axis
from .excitation import GaussianPulse

log = logging.getLogger(__name__)

__all__ = [
    "SimConfig",
    "PortSpec",
    "PortRecord",
    "RunResult",
    "Solver",
    "InstabilityError",
    "TerminationWarning",
    "PortError",
    "resolve_ports",
    "courant_dt",
    "run",
]


class InstabilityError(FloatingPointError):
    def __init__(self, step):
        super().__init__(f"non-finite field detected at step {step}")
        self.step = step


class TerminationWarning(UserWarning):
    """Energy had not decayed below the threshold when max_steps was hit."""


class PortError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    courant_factor: float = 0.99
    max_steps: int = 200_000
    decay_db: float = 50.0
    decay_window: int = 1000
    excitation: GaussianPulse = field(default_factory=GaussianPulse)
    reference_impedance: float = 50.0
    cpml: CpmlParams = field(default_factory=CpmlParams)
    threads: int | None = None

    def __post_init__(self):
        if not (0 < self.courant_factor <= 1):
            raise ValueError(f"courant_factor must be in (0, 1], got {self.courant_factor}")
        if self.max_steps < 1 or self.decay_window < 1:
            raise ValueError("max_steps and decay_window must be positive")


def courant_dt(spacing_m, factor: float) -> float:
    dx, dy, dz = spacing_m
    return factor / (C0 * math.sqrt(1 / dx**2 + 1 / dy**2 + 1 / dz**2))


@dataclass(frozen=True)
class PortSpec:
    """Vertical E-edge column (i, j, k0..k1-1) from ground to top metal."""

    id: int
    i: int
    j: int
    k0: int
    k1: int
    polarity: int = 1
    impedance: float = 50.0

    @property
    def n_edges(self):
        return self.k1 - self.k0


@dataclass
class PortRecord:
    """Port voltage and current series from one run.

    ``v[n]`` is sampled at ``v_t0 + n dt`` and ``i[n]`` at ``i_t0 + n dt``;
    the current flows from the port into the structure.
    """

    port_id: int
    dt: float
    v: np.ndarray
    i: np.ndarray
    excited: bool
    v_t0: float = 0.0
    i_t0: float = 0.0
    band: tuple | None = None
    impedance: float = 50.0

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        self.i = np.asarray(self.i, dtype=float)
        if self.v.shape != self.i.shape:
            raise ValueError("v and i must have equal lengths")
        if not (np.all(np.isfinite(self.v)) and np.all(np.isfinite(self.i))):
            raise InstabilityError(-1)

    def scaled(self, k: float) -> "PortRecord":
        return PortRecord(self.port_id, self.dt, self.v * k, self.i * k, self.excited,
                          self.v_t0, self.i_t0, self.band, self.impedance)


@dataclass
class RunResult:
    records: dict
    monitors: list
    steps: int
    converged: bool
    dt: float
    excited: int


def resolve_ports(grid: MaterialGrid, reference_impedance=50.0):
    """Map the layout's ports onto vertical edge columns of the grid."""
    if grid.layout is None:
        raise PortError("grid carries no layout to take ports from")
    out = []
    for p in grid.layout.ports:
        i, j = grid.nearest_node(p.x, p.y)
        nx, ny, _ = grid.shape
        if not (0 < i < nx and 0 < j < ny):
            raise PortError(f"port {p.id} falls outside the grid")
        for k, what in ((grid.k_top, "top metal"), (grid.k_ground, "ground")):
            touching = (grid.pec_x[i - 1, j, k] or grid.pec_x[i, j, k]
                        or grid.pec_y[i, j - 1, k] or grid.pec_y[i, j, k])
            if not touching:
                raise PortError(f"port {p.id} at node ({i}, {j}) does not touch {what}")
        out.append(PortSpec(p.id, i, j, grid.k_ground, grid.k_top, 1, p.impedance))
    return out


def _edge_average(cell, axis_pairs):
    """Average a cell array onto edges; ``axis_pairs`` are the two axes
    transverse to the edge direction."""
    pad = [(0, 0)] * 3
    for a in axis_pairs:
        pad[a] = (1, 1)
    p = np.pad(cell, pad, mode="edge")
    a0, a1 = axis_pairs

    def sl(o0, o1):
        s = [slice(None)] * 3
        s[a0] = slice(o0, p.shape[a0] - 1 + o0)
        s[a1] = slice(o1, p.shape[a1] - 1 + o1)
        return tuple(s)

    return 0.25 * (p[sl(0, 0)] + p[sl(1, 0)] + p[sl(0, 1)] + p[sl(1, 1)])


class Solver:
    """Owns the field arrays of one run.  Not safe for concurrent use."""

    def __init__(self, grid: MaterialGrid, ports=None, config: SimConfig | None = None,
                 excite: int | None = None, monitors=(), amplitude: float = 1.0,
                 dtype=np.float32):
        self.grid = grid
        self.config = config = config or SimConfig()
        if config.threads:
            numba.set_num_threads(int(config.threads))
        self.ports = list(ports) if ports is not None else resolve_ports(grid, config.reference_impedance)
        ids = [p.id for p in self.ports]
        if excite is None and self.ports:
            excite = self.ports[0].id
        if self.ports and excite not in ids:
            raise PortError(f"excited port {excite} not among {ids}")
        self.excite = excite
        self.amplitude = amplitude
        self.dtype = dtype
        self.dt = courant_dt(grid.spacing_m, config.courant_factor)
        self.n = 0
        nx, ny, nz = grid.shape
        z = lambda *s: np.zeros(s, dtype=dtype)
        self.ex, self.ey, self.ez = z(nx, ny + 1, nz + 1), z(nx + 1, ny, nz + 1), z(nx + 1, ny + 1, nz)
        self.hx, self.hy, self.hz = z(nx + 1, ny, nz), z(nx, ny + 1, nz), z(nx, ny, nz + 1)
        self._build_materials()
        self._build_cpml()
        self.monitors = list(monitors)
        for m in self.monitors:
            m.attach(self)

    @property
    def fields(self):
        return self.ex, self.ey, self.ez, self.hx, self.hy, self.hz

    # -- setup -----------------------------------------------------------

    def _build_materials(self):
        g = self.grid
        dt = self.dt
        dx, dy, dz = g.spacing_m
        eps_e = [_edge_average(g.eps_r, (1, 2)), _edge_average(g.eps_r, (0, 2)), _edge_average(g.eps_r, (0, 1))]
        sig_e = [_edge_average(g.sigma, (1, 2)), _edge_average(g.sigma, (0, 2)), _edge_average(g.sigma, (0, 1))]
        pec = [g.pec_x, g.pec_y, g.pec_z]
        keys = [e + 1j * s for e, s in zip(eps_e, sig_e)]
        table, inverse = np.unique(np.concatenate([k.ravel() for k in keys]), return_inverse=True)
        eps_t, sig_t = table.real * epsilon_0, table.imag
        loss = sig_t * dt / (2 * eps_t)
        ca = [0.0] + list((1 - loss) / (1 + loss))
        cb = [0.0] + list((dt / eps_t) / (1 + loss))
        self._port_src = []
        port_materials = []
        mats = []
        offset = 0
        for comp, (k, p) in enumerate(zip(keys, pec)):
            ids = inverse[offset:offset + k.size].reshape(k.shape) + 1
            offset += k.size
            ids[p] = 0
            mats.append(ids)
        mz = mats[2]
        area = dx * dy
        for port in self.ports:
            n_e = port.n_edges
            r_e = port.impedance / n_e
            coefs = []
            for kk in range(port.k0, port.k1):
                if mz[port.i, port.j, kk] == 0:
                    raise PortError(f"port {port.id} column crosses a PEC edge")
                eps = eps_e[2][port.i, port.j, kk] * epsilon_0
                sig = sig_e[2][port.i, port.j, kk]
                beta = dt * dz / (2 * eps * r_e * area)
                lo = sig * dt / (2 * eps)
                mid = len(ca)
                ca.append((1 - lo - beta) / (1 + lo + beta))
                cb.append((dt / eps) / (1 + lo + beta))
                mz[port.i, port.j, kk] = mid
                coefs.append((dt / (eps * r_e * area)) / (1 + lo + beta))
            self._port_src.append(np.array(coefs))
        id_dtype = np.uint8 if len(ca) <= 256 else np.uint16
        self.mx, self.my, self.mz = (m.astype(id_dtype) for m in mats)
        self.ca = np.array(ca, dtype=self.dtype)
        self.cb = np.array(cb, dtype=self.dtype)
        self.ch = self.dtype(dt / mu_0)
        self._eps_edges = None

    def _build_cpml(self):
        g = self.grid
        dtp = self.dtype
        params = self.config.cpml
        if g.pml_cells:
            from dataclasses import replace
            params = replace(params, cells=g.pml_cells)
            axes = [cpml_axis(n, d, self.dt, params, dtp) for n, d in zip(g.shape, g.spacing_m)]
        else:
            axes = [cpml_axis(n, d, self.dt, None, dtp) for n, d in zip(g.shape, g.spacing_m)]
        self.axes = axes
        nx, ny, nz = g.shape
        ax, ay, az = axes
        z = lambda *s: np.zeros(s, dtype=dtp)
        ne, nh = [a.e_idx.size for a in axes], [a.h_idx.size for a in axes]
        self.psi = dict(
            eyx=z(ne[0], ny, nz + 1), ezx=z(ne[0], ny + 1, nz),
            hyx=z(nh[0], ny + 1, nz), hzx=z(nh[0], ny, nz + 1),
            exy=z(nx, ne[1], nz + 1), ezy=z(nx + 1, ne[1], nz),
            hxy=z(nx + 1, nh[1], nz), hzy=z(nx, nh[1], nz + 1),
            exz=z(nx, ny + 1, ne[2]), eyz=z(nx + 1, ny, ne[2]),
            hxz=z(nx + 1, ny, nh[2]), hyz=z(nx, ny + 1, nh[2]),
        )
        self.inv_d = [dtp(1.0 / d) for d in g.spacing_m]

    # -- time stepping ----------------------------------------------------

    def source_voltage(self, t):
        return self.amplitude * float(self.config.excitation(t))

    def step(self):
        """Advance one leapfrog step; returns (currents, voltages) per port."""
        ex, ey, ez, hx, hy, hz = self.fields
        ax, ay, az = self.axes
        ps = self.psi
        idx, idy, idz = self.inv_d
        ch = self.ch
        kernels.update_h(ex, ey, ez, hx, hy, hz, ch, ax.inv_h, ay.inv_h, az.inv_h)
        if ax.h_idx.size:
            kernels.cpml_h_x(ey, ez, hy, hz, ch, ax.h_idx, ax.h_b, ax.h_c, idx, ps["hyx"], ps["hzx"])
        if ay.h_idx.size:
            kernels.cpml_h_y(ex, ez, hx, hz, ch, ay.h_idx, ay.h_b, ay.h_c, idy, ps["hxy"], ps["hzy"])
        if az.h_idx.size:
            kernels.cpml_h_z(ex, ey, hx, hy, ch, az.h_idx, az.h_b, az.h_c, idz, ps["hxz"], ps["hyz"])
        currents = [self._port_current(p) for p in self.ports]

        mx, my, mz, ca, cb = self.mx, self.my, self.mz, self.ca, self.cb
        kernels.update_e(ex, ey, ez, hx, hy, hz, mx, my, mz, ca, cb, ax.inv_e, ay.inv_e, az.inv_e)
        if ax.e_idx.size:
            kernels.cpml_e_x(ey, ez, hy, hz, my, mz, cb, ax.e_idx, ax.e_b, ax.e_c, idx, ps["eyx"], ps["ezx"])
        if ay.e_idx.size:
            kernels.cpml_e_y(ex, ez, hx, hz, mx, mz, cb, ay.e_idx, ay.e_b, ay.e_c, idy, ps["exy"], ps["ezy"])
        if az.e_idx.size:
            kernels.cpml_e_z(ex, ey, hx, hy, mx, my, cb, az.e_idx, az.e_b, az.e_c, idz, ps["exz"], ps["eyz"])
        vs = self.source_voltage((self.n + 0.5) * self.dt)
        for port, coefs in zip(self.ports, self._port_src):
            if port.id == self.excite and vs != 0.0:
                v_e = port.polarity * vs / port.n_edges
                col = ez[port.i, port.j, port.k0:port.k1]
                col -= (coefs * v_e).astype(self.dtype)
        voltages = [self._port_voltage(p) for p in self.ports]
        for m in self.monitors:
            m.sample(self, self.n)
        self.n += 1
        return currents, voltages

    def _port_voltage(self, p: PortSpec) -> float:
        col = self.ez[p.i, p.j, p.k0:p.k1].astype(np.float64)
        return -p.polarity * float(col.sum()) * self.grid.spacing_m[2]

    def _port_current(self, p: PortSpec) -> float:
        dx, dy, _ = self.grid.spacing_m
        i, j, ks = p.i, p.j, slice(p.k0, p.k1)
        hx, hy = self.hx, self.hy
        loop = ((hy[i, j, ks].astype(np.float64) - hy[i - 1, j, ks]) * dy
                - (hx[i, j, ks].astype(np.float64) - hx[i, j - 1, ks]) * dx)
        return p.polarity * float(loop.mean())

    # -- diagnostics -------------------------------------------------------

    def field_energy(self, lo=None, hi=None) -> float:
        """Electromagnetic energy (J) in the node box [lo, hi)."""
        g = self.grid
        if self._eps_edges is None:
            self._eps_edges = [_edge_average(g.eps_r, (1, 2)), _edge_average(g.eps_r, (0, 2)),
                               _edge_average(g.eps_r, (0, 1))]
        lo = lo or (0, 0, 0)
        hi = hi or g.shape
        sl = tuple(slice(a, b) for a, b in zip(lo, hi))
        dv = np.prod(g.spacing_m)
        we = sum(float((eps[sl] * f[sl].astype(np.float64) ** 2).sum())
                 for eps, f in zip(self._eps_edges, (self.ex, self.ey, self.ez)))
        wh = sum(float((f[sl].astype(np.float64) ** 2).sum()) for f in (self.hx, self.hy, self.hz))
        return 0.5 * dv * (epsilon_0 * we + mu_0 * wh)

    def fields_finite(self) -> bool:
        return all(np.isfinite(f).all() for f in self.fields)

    def run(self, max_steps=None) -> RunResult:
        cfg = self.config
        max_steps = max_steps or cfg.max_steps
        n_p = len(self.ports)
        v = np.zeros((n_p, max_steps))
        cur = np.zeros((n_p, max_steps))
        z0 = cfg.reference_impedance
        window = cfg.decay_window
        peak = 0.0
        src_end = cfg.excitation.duration
        thresh = 10 ** (-cfg.decay_db / 10)
        converged = False
        steps = 0
        for n in range(max_steps):
            c_n, v_n = self.step()
            v[:, n] = v_n
            cur[:, n] = c_n
            steps = n + 1
            if steps % window == 0:
                seg = slice(steps - window, steps)
                e_win = float((v[:, seg] ** 2).sum() + ((z0 * cur[:, seg]) ** 2).sum()) if n_p else 0.0
                if not math.isfinite(e_win) or not self.fields_finite():
                    raise InstabilityError(steps)
                peak = max(peak, e_win)
                if n_p and steps * self.dt > src_end and peak > 0 and e_win < thresh * peak:
                    converged = True
                    break
        if not converged:
            if not self.fields_finite():
                raise InstabilityError(steps)
            warnings.warn(f"energy did not decay {cfg.decay_db} dB within {steps} steps",
                          TerminationWarning, stacklevel=2)
        records = {}
        for idx, p in enumerate(self.ports):
            records[p.id] = PortRecord(p.id, self.dt, v[idx, :steps].copy(), cur[idx, :steps].copy(),
                                       p.id == self.excite, v_t0=self.dt, i_t0=0.5 * self.dt,
                                       band=cfg.excitation.band, impedance=p.impedance)
        log.info("run finished after %d steps (converged=%s)", steps, converged)
        return RunResult(records, self.monitors, steps, converged, self.dt, self.excite)


def run(grid: MaterialGrid, ports=None, monitors=(), config: SimConfig | None = None,
        excite: int | None = None, max_steps=None, amplitude=1.0) -> RunResult:
    """Time-step one excitation of ``grid`` until the port energy decays."""
    return Solver(grid, ports, config, excite, monitors, amplitude).run(max_steps)
