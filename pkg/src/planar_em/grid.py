"""Voxelization of a layout onto a uniform Yee grid.

Cell (i, j, k) spans nodes i..i+1, j..j+1, k..k+1.  Node 0 sits at
``origin``; the PML and air padding surround the board on every side.
Metal becomes zero-thickness PEC sheets: an E-edge lying in a metal
layer's z-plane is flagged when its midpoint falls inside (or on the
boundary of) one of the layer's polygons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import shapely
from scipy.constants import epsilon_0

from .geometry import Layer, Layout

__all__ = [
    "GridSpec",
    "MaterialGrid",
    "VoxelizationError",
    "ResourceGuardError",
    "voxelize",
    "convergence_refine",
    "estimate_cells",
    "rasterize_layer",
    "write_volume",
    "read_volume",
    "LOSS_REFERENCE_HZ",
]

LOSS_REFERENCE_HZ = 4.5e9
_EDGE_TOL_MM = 1e-7


class VoxelizationError(ValueError):
    pass


class ResourceGuardError(RuntimeError):
    """Refusal to allocate a grid past the configured limit."""

    def __init__(self, message, estimated_cells=None):
        super().__init__(message)
        self.estimated_cells = estimated_cells


@dataclass(frozen=True)
class GridSpec:
    """Cell sizes in mm and padding counts in cells.

    ``padding_cells`` is the air buffer between board edge and PML in x/y;
    ``padding_above``/``padding_below`` are the z air buffers above the top
    metal and below the ground.  The substrate thickness is snapped to the
    nearest whole number of ``dz`` cells (at least one).
    """

    dx: float = 0.2
    dy: float = 0.2
    dz: float = 0.127
    padding_cells: int = 24
    padding_above: int = 32
    padding_below: int = 24
    pml_cells: int = 10

    def __post_init__(self):
        for name in ("dx", "dy", "dz"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be > 0, got {v}")
        for name in ("padding_cells", "padding_above", "padding_below", "pml_cells"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def substrate_cells(self, thickness_mm: float) -> int:
        return max(1, int(round(thickness_mm / self.dz)))

    def refined(self, factor: int) -> "GridSpec":
        if factor < 1 or int(factor) != factor:
            raise ValueError(f"refinement factor must be an integer >= 1, got {factor}")
        f = int(factor)
        return replace(self, dx=self.dx / f, dy=self.dy / f, dz=self.dz / f,
                       padding_cells=self.padding_cells * f,
                       padding_above=self.padding_above * f,
                       padding_below=self.padding_below * f)


@dataclass
class MaterialGrid:
    shape: tuple
    spacing: tuple               # (dx, dy, dz) in mm
    origin: tuple                # node (0, 0, 0) in board mm; z = 0 is the ground plane
    eps_r: np.ndarray            # (nx, ny, nz)
    sigma: np.ndarray            # (nx, ny, nz), S/m
    pec_x: np.ndarray            # (nx, ny+1, nz+1)
    pec_y: np.ndarray            # (nx+1, ny, nz+1)
    pec_z: np.ndarray            # (nx+1, ny+1, nz)
    k_ground: int
    k_top: int
    pml_cells: int
    layer_planes: dict
    layout: Layout | None = None

    @property
    def spacing_m(self):
        return tuple(d * 1e-3 for d in self.spacing)

    @property
    def n_cells(self) -> int:
        nx, ny, nz = self.shape
        return nx * ny * nz

    def node_x(self, i):
        return self.origin[0] + np.asarray(i) * self.spacing[0]

    def node_y(self, j):
        return self.origin[1] + np.asarray(j) * self.spacing[1]

    def node_z(self, k):
        return self.origin[2] + np.asarray(k) * self.spacing[2]

    def nearest_node(self, x_mm: float, y_mm: float):
        xs = self.layout.symmetry_x if self.layout is not None else None
        if xs is not None:
            # ties round away from the mirror plane on both sides
            u = (x_mm - xs) / self.spacing[0]
            mid = (xs - self.origin[0]) / self.spacing[0]
            i = int(round(mid + math.copysign(math.floor(abs(u) + 0.5), u)))
        else:
            i = int(math.floor((x_mm - self.origin[0]) / self.spacing[0] + 0.5))
        j = int(math.floor((y_mm - self.origin[1]) / self.spacing[1] + 0.5))
        return i, j

    def plane_flags(self, k: int):
        """Flagged (Ex, Ey) edges in the z-plane at node k."""
        return self.pec_x[:, :, k], self.pec_y[:, :, k]

    def metal_area(self, k: int) -> float:
        """Area in mm^2 of the cell faces in plane k enclosed by flagged edges."""
        fx, fy = self.plane_flags(k)
        return _face_area(fx, fy, self.spacing)

    def interior_slices(self):
        """Index ranges of the non-PML region in cells."""
        p = self.pml_cells
        return tuple(slice(p, n - p) for n in self.shape)

    def equivalent(self, other: "MaterialGrid") -> bool:
        return (self.shape == other.shape and self.spacing == other.spacing
                and self.origin == other.origin
                and all(np.array_equal(getattr(self, a), getattr(other, a))
                        for a in ("eps_r", "sigma", "pec_x", "pec_y", "pec_z")))


def _face_area(fx, fy, spacing):
    faces = fx[:, :-1] & fx[:, 1:] & fy[:-1, :] & fy[1:, :]
    return float(faces.sum()) * spacing[0] * spacing[1]


def _axis_layout(lo, hi, d, pad):
    n_board = int(math.ceil((hi - lo) / d - 1e-9))
    return n_board + 2 * pad, lo - pad * d


def _grid_frame(layout: Layout, spec: GridSpec):
    b = layout.bounds
    pad_xy = spec.padding_cells + spec.pml_cells
    if layout.symmetry_x is not None:
        # centre the frame on the mirror plane so the node set is symmetric
        xs = layout.symmetry_x
        half = int(math.ceil(max(xs - b.x0, b.x1 - xs) / spec.dx - 1e-9)) + pad_xy
        nx, x0 = 2 * half, xs - half * spec.dx
    else:
        nx, x0 = _axis_layout(b.x0, b.x1, spec.dx, pad_xy)
    ny, y0 = _axis_layout(b.y0, b.y1, spec.dy, pad_xy)
    n_sub = spec.substrate_cells(layout.stackup.thickness)
    k_ground = spec.pml_cells + spec.padding_below
    k_top = k_ground + n_sub
    nz = k_top + spec.padding_above + spec.pml_cells
    z0 = -k_ground * spec.dz
    return (nx, ny, nz), (x0, y0, z0), k_ground, k_top


def estimate_cells(layout: Layout, spec: GridSpec) -> int:
    (nx, ny, nz), _, _, _ = _grid_frame(layout, spec)
    return nx * ny * nz


def _inside(poly, xs, ys):
    grown = poly.buffer(_EDGE_TOL_MM, join_style="mitre")
    shapely.prepare(grown)
    return shapely.intersects_xy(grown, xs, ys)


def rasterize_layer(shapes, shape3, origin, spacing):
    """Flag in-plane E-edges covered by ``shapes``.

    Returns ``(fx, fy, counts)`` with fx of shape (nx, ny+1), fy of shape
    (nx+1, ny) and the number of edges each shape contributed.
    """
    nx, ny = shape3[0], shape3[1]
    dx, dy = spacing[0], spacing[1]
    fx = np.zeros((nx, ny + 1), dtype=bool)
    fy = np.zeros((nx + 1, ny), dtype=bool)
    counts = {}
    for s in shapes:
        poly = s.as_polygon()
        x_lo, y_lo, x_hi, y_hi = s.extent
        i0 = max(0, int(math.floor((x_lo - origin[0]) / dx)) - 1)
        i1 = min(nx, int(math.ceil((x_hi - origin[0]) / dx)) + 1)
        j0 = max(0, int(math.floor((y_lo - origin[1]) / dy)) - 1)
        j1 = min(ny, int(math.ceil((y_hi - origin[1]) / dy)) + 1)
        n = 0
        # Ex edges: midpoint (x_{i+1/2}, y_j)
        ii, jj = np.meshgrid(np.arange(i0, i1), np.arange(j0, j1 + 1), indexing="ij")
        hit = _inside(poly, origin[0] + (ii + 0.5) * dx, origin[1] + jj * dy)
        fx[i0:i1, j0:j1 + 1] |= hit
        n += int(hit.sum())
        # Ey edges: midpoint (x_i, y_{j+1/2})
        ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1), indexing="ij")
        hit = _inside(poly, origin[0] + ii * dx, origin[1] + (jj + 0.5) * dy)
        fy[i0:i1 + 1, j0:j1] |= hit
        n += int(hit.sum())
        counts[s.name] = n
    return fx, fy, counts


def voxelize(layout: Layout, spec: GridSpec | None = None, max_cells: int | None = None,
             loss_reference_hz: float = LOSS_REFERENCE_HZ) -> MaterialGrid:
    spec = spec or GridSpec()
    shape, origin, k_ground, k_top = _grid_frame(layout, spec)
    nx, ny, nz = shape
    if max_cells is not None and nx * ny * nz > max_cells:
        raise ResourceGuardError(
            f"grid of {nx}x{ny}x{nz} = {nx * ny * nz} cells exceeds limit {max_cells}",
            nx * ny * nz)
    spacing = (spec.dx, spec.dy, spec.dz)
    st = layout.stackup
    b = layout.bounds

    eps = np.ones(shape)
    sigma = np.zeros(shape)
    xc = origin[0] + (np.arange(nx) + 0.5) * spec.dx
    yc = origin[1] + (np.arange(ny) + 0.5) * spec.dy
    on_board = ((xc >= b.x0) & (xc <= b.x1))[:, None] & ((yc >= b.y0) & (yc <= b.y1))[None, :]
    sub = np.zeros(shape, dtype=bool)
    sub[:, :, k_ground:k_top] = on_board[:, :, None]
    eps[sub] = st.eps_r
    sigma[sub] = 2 * math.pi * loss_reference_hz * epsilon_0 * st.eps_r * st.loss_tangent

    pec_x = np.zeros((nx, ny + 1, nz + 1), dtype=bool)
    pec_y = np.zeros((nx + 1, ny, nz + 1), dtype=bool)
    pec_z = np.zeros((nx + 1, ny + 1, nz), dtype=bool)
    planes = {Layer.TOP_METAL: k_top, Layer.GROUND: k_ground, Layer.EBG_PATCH: k_ground}
    for layer, k in planes.items():
        shapes = layout.on_layer(layer)
        if not shapes:
            continue
        fx, fy, counts = rasterize_layer(shapes, shape, origin, spacing)
        for name, n in counts.items():
            if n == 0:
                raise VoxelizationError(f"shape {name!r} is under-resolved: no grid edges flagged")
        pec_x[:, :, k] |= fx
        pec_y[:, :, k] |= fy

    return MaterialGrid(shape=shape, spacing=spacing, origin=origin, eps_r=eps, sigma=sigma,
                        pec_x=pec_x, pec_y=pec_y, pec_z=pec_z, k_ground=k_ground, k_top=k_top,
                        pml_cells=spec.pml_cells,
                        layer_planes={l.value: k for l, k in planes.items()}, layout=layout)


def convergence_refine(layout: Layout, spec: GridSpec, factor: int,
                       max_cells: int = 200_000_000) -> MaterialGrid:
    """Voxelize with every cell size divided by ``factor``; padding keeps its
    physical size."""
    fine = spec.refined(factor)
    n = estimate_cells(layout, fine)
    if n > max_cells:
        raise ResourceGuardError(f"refinement x{factor} needs ~{n} cells (limit {max_cells})", n)
    return voxelize(layout, fine)


# ---------------------------------------------------------------------------
# Volume export: VTK legacy binary STRUCTURED_POINTS, cell data,
# big-endian, x fastest.
# ---------------------------------------------------------------------------

def write_volume(path, arrays: dict, spacing, origin, title="planar-em volume"):
    """Write cell-centred scalar arrays sharing one (nx, ny, nz) shape."""
    shapes = {np.shape(a) for a in arrays.values()}
    if len(shapes) != 1:
        raise ValueError(f"arrays disagree in shape: {shapes}")
    (shape,) = shapes
    if len(shape) == 2:
        shape = shape + (1,)
    nx, ny, nz = shape
    header = (
        "# vtk DataFile Version 3.0\n"
        f"{title}\n"
        "BINARY\n"
        "DATASET STRUCTURED_POINTS\n"
        f"DIMENSIONS {nx + 1} {ny + 1} {nz + 1}\n"
        f"ORIGIN {origin[0]:.9g} {origin[1]:.9g} {origin[2]:.9g}\n"
        f"SPACING {spacing[0]:.9g} {spacing[1]:.9g} {spacing[2]:.9g}\n"
        f"CELL_DATA {nx * ny * nz}\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        for name, arr in arrays.items():
            a = np.asarray(arr, dtype=">f4").reshape(shape)
            fh.write(f"SCALARS {name} float 1\nLOOKUP_TABLE default\n".encode("ascii"))
            fh.write(np.ascontiguousarray(a.transpose(2, 1, 0)).tobytes())
            fh.write(b"\n")


def read_volume(path):
    """Inverse of :func:`write_volume`; returns (arrays, spacing, origin)."""
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def line():
        nonlocal pos
        end = data.index(b"\n", pos)
        out = data[pos:end].decode("ascii")
        pos = end + 1
        return out

    if not line().startswith("# vtk"):
        raise ValueError(f"{path}: not a VTK legacy file")
    line()
    if line().strip() != "BINARY":
        raise ValueError(f"{path}: expected BINARY")
    line()
    dims = [int(v) - 1 for v in line().split()[1:]]
    origin = tuple(float(v) for v in line().split()[1:])
    spacing = tuple(float(v) for v in line().split()[1:])
    n = int(line().split()[1])
    arrays = {}
    while pos < len(data):
        head = line()
        if not head.strip():
            continue
        name = head.split()[1]
        line()
        raw = np.frombuffer(data, dtype=">f4", count=n, offset=pos)
        pos += 4 * n + 1
        arrays[name] = raw.reshape(dims[2], dims[1], dims[0]).transpose(2, 1, 0).astype(np.float64)
    return arrays, spacing, origin
