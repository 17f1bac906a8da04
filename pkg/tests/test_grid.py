import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planar_em.geometry import Bounds, Layer, LayerShape, Layout, Port, StackUp, build_mimo, add_ebg, EbgParams, layout_area
from planar_em.grid import (
    GridSpec,
    ResourceGuardError,
    VoxelizationError,
    convergence_refine,
    read_volume,
    voxelize,
    write_volume,
)
from conftest import rect


def _layout(shapes, size=(10.0, 10.0), stack=None):
    return Layout(stack or StackUp(), shapes, [], Bounds(0, 0, *size))


def _pip(poly, x, y):
    """Even-odd point-in-polygon with boundary counted inside (oracle)."""
    n = len(poly)
    inside = False
    for k in range(n):
        (x1, y1), (x2, y2) = poly[k], poly[(k + 1) % n]
        # on-segment check
        cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
        if abs(cross) < 1e-9 and min(x1, x2) - 1e-9 <= x <= max(x1, x2) + 1e-9 \
                and min(y1, y2) - 1e-9 <= y <= max(y1, y2) + 1e-9:
            return True
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xi:
                inside = not inside
    return inside


def _oracle_flags(poly, g):
    nx, ny, _ = g.shape
    dx, dy = g.spacing[:2]
    ox, oy = g.origin[:2]
    fx = np.array([[_pip(poly, ox + (i + 0.5) * dx, oy + j * dy) for j in range(ny + 1)] for i in range(nx)])
    fy = np.array([[_pip(poly, ox + i * dx, oy + (j + 0.5) * dy) for j in range(ny)] for i in range(nx + 1)])
    return fx, fy


def _bbox_cells(fx, fy):
    ii, jj = np.nonzero(fx)
    ki, kj = np.nonzero(fy)
    x_lo, x_hi = min(ii.min(), ki.min()), max(ii.max() + 1, ki.max())
    y_lo, y_hi = min(jj.min(), kj.min()), max(jj.max(), kj.max() + 1)
    return x_hi - x_lo, y_hi - y_lo


def test_empty_layout_all_air():
    lay = _layout([], (2.0, 2.0), StackUp(eps_r=1.0, loss_tangent=0.0, thickness=0.5))
    g = voxelize(lay, GridSpec(0.2, 0.2, 0.1, 0, 3, 2, 0))
    assert g.shape == (10, 10, 10)
    assert np.all(g.eps_r == 1) and np.all(g.sigma == 0)
    assert not (g.pec_x.any() or g.pec_y.any() or g.pec_z.any())


def test_rectangle_flag_bbox_matches_oracle():
    poly = rect(3, 4, 7, 6)
    lay = _layout([LayerShape(Layer.TOP_METAL, poly, "r")])
    g = voxelize(lay, GridSpec(0.2, 0.2, 0.127, 2, 2, 2, 0))
    fx, fy = g.plane_flags(g.k_top)
    ox, oy = _oracle_flags(poly, g)
    assert np.array_equal(fx, ox) and np.array_equal(fy, oy)
    assert _bbox_cells(fx, fy) == (20, 10)


def test_substrate_two_layers_at_dz_0254():
    lay = _layout([])
    g = voxelize(lay, GridSpec(0.4, 0.4, 0.254, 2, 3, 3, 0))
    assert g.k_top - g.k_ground == 2
    col = g.eps_r[g.shape[0] // 2, g.shape[1] // 2]
    assert np.count_nonzero(col == 3.66) == 2


def test_loss_from_tangent():
    g = voxelize(_layout([]), GridSpec(0.4, 0.4, 0.254, 2, 3, 3, 0))
    sub = g.sigma[g.eps_r > 1]
    expected = 2 * math.pi * 4.5e9 * 8.8541878128e-12 * 3.66 * 0.004
    assert np.allclose(sub, expected, rtol=1e-9)


def test_flags_only_on_layer_planes():
    lay = add_ebg(build_mimo(), EbgParams(n_rows=1))
    g = voxelize(lay, GridSpec(0.4, 0.4, 0.254, 4, 4, 4, 6))
    planes = set(g.layer_planes.values())
    kx = set(np.nonzero(g.pec_x.any(axis=(0, 1)))[0])
    ky = set(np.nonzero(g.pec_y.any(axis=(0, 1)))[0])
    assert kx <= planes and ky <= planes
    assert not g.pec_z.any()


def test_under_resolved_shape_named():
    lay = _layout([LayerShape(Layer.TOP_METAL, rect(3.05, 3.05, 3.1, 3.1), "speck")])
    with pytest.raises(VoxelizationError, match="speck"):
        voxelize(lay, GridSpec(0.4, 0.4, 0.254, 2, 2, 2, 0))


def test_refine_factor_one_identical():
    lay = _layout([LayerShape(Layer.TOP_METAL, rect(3, 4, 7, 6), "r")])
    spec = GridSpec(0.2, 0.2, 0.127, 2, 2, 2, 0)
    assert convergence_refine(lay, spec, 1).equivalent(voxelize(lay, spec))


def test_refine_factor_two_bbox():
    poly = rect(3, 4, 7, 6)
    lay = _layout([LayerShape(Layer.TOP_METAL, poly, "r")])
    g = convergence_refine(lay, GridSpec(0.2, 0.2, 0.127, 2, 2, 2, 0), 2)
    fx, fy = g.plane_flags(g.k_top)
    assert _bbox_cells(fx, fy) == (40, 20)


def test_refine_guard():
    lay = build_mimo()
    with pytest.raises(ResourceGuardError) as e:
        convergence_refine(lay, GridSpec(), 4, max_cells=1_000_000)
    assert e.value.estimated_cells > 1_000_000


def test_coarse_flags_contained_in_fine():
    poly = [(2.1, 2.3), (7.7, 3.1), (6.2, 7.9), (3.0, 6.4)]
    lay = _layout([LayerShape(Layer.TOP_METAL, poly, "quad")])
    spec = GridSpec(0.4, 0.4, 0.254, 0, 2, 2, 0)
    c = voxelize(lay, spec)
    f = convergence_refine(lay, spec, 2)
    fx_c, _ = c.plane_flags(c.k_top)
    fx_f, _ = f.plane_flags(f.k_top)
    # a coarse Ex edge is the union of two fine Ex edges on the same line
    for i, j in zip(*np.nonzero(fx_c)):
        assert fx_f[2 * i, 2 * j] or fx_f[2 * i + 1, 2 * j]


def test_area_converges_with_refinement():
    poly = [(2.1, 2.3), (7.7, 3.1), (6.2, 7.9), (3.0, 6.4)]
    lay = _layout([LayerShape(Layer.TOP_METAL, poly, "quad")])
    exact = layout_area(lay, Layer.TOP_METAL)
    spec = GridSpec(0.4, 0.4, 0.254, 0, 2, 2, 0)
    errs = []
    for f in (1, 2, 4):
        g = convergence_refine(lay, spec, f)
        errs.append(abs(g.metal_area(g.k_top) - exact))
    perim = sum(math.dist(poly[k], poly[(k + 1) % 4]) for k in range(4))
    for f, e in zip((1, 2, 4), errs):
        assert e <= perim * 0.4 / f
    assert errs[2] < errs[0]


@settings(max_examples=30, deadline=None)
@given(x0=st.floats(0.5, 4), y0=st.floats(0.5, 4), w=st.floats(0.8, 5), h=st.floats(0.8, 5),
       d=st.sampled_from([0.2, 0.25, 0.4]))
def test_area_error_bound(x0, y0, w, h, d):
    poly = rect(x0, y0, x0 + w, y0 + h)
    lay = _layout([LayerShape(Layer.TOP_METAL, poly, "r")])
    g = voxelize(lay, GridSpec(d, d, 0.254, 1, 2, 2, 0))
    err = abs(g.metal_area(g.k_top) - layout_area(lay, Layer.TOP_METAL))
    assert err <= 2 * (w + h) * d + 1e-9


@settings(max_examples=15, deadline=None)
@given(shift=st.integers(0, 3), rev=st.booleans())
def test_vertex_order_independent(shift, rev):
    poly = [(2.1, 2.3), (7.7, 3.1), (6.2, 7.9), (3.0, 6.4)]
    p2 = poly[shift:] + poly[:shift]
    if rev:
        p2 = p2[::-1]
    spec = GridSpec(0.4, 0.4, 0.254, 1, 2, 2, 0)
    a = voxelize(_layout([LayerShape(Layer.TOP_METAL, poly, "q")]), spec)
    b = voxelize(_layout([LayerShape(Layer.TOP_METAL, p2, "q")]), spec)
    assert a.equivalent(b)


def test_mimo_grid_mirror_symmetric():
    lay = add_ebg(build_mimo(), EbgParams(n_rows=3))
    g = voxelize(lay, GridSpec(0.4, 0.4, 0.254, 4, 4, 4, 6))
    assert np.array_equal(g.pec_x, g.pec_x[::-1])
    assert np.array_equal(g.pec_y, g.pec_y[::-1])
    assert np.array_equal(g.eps_r, g.eps_r[::-1])
    (i1, j1), (i2, j2) = (g.nearest_node(p.x, p.y) for p in lay.ports)
    assert i1 + i2 == g.shape[0] and j1 == j2


def test_volume_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    a = rng.random((4, 3, 2))
    b = rng.random((4, 3, 2))
    p = tmp_path / "v.vtk"
    write_volume(p, {"eps_r": a, "sigma": b}, (0.2, 0.2, 0.127), (-1.0, -2.0, 0.0))
    arrays, spacing, origin = read_volume(p)
    assert np.allclose(arrays["eps_r"], a.astype(np.float32))
    assert np.allclose(arrays["sigma"], b.astype(np.float32))
    assert spacing == (0.2, 0.2, 0.127) and origin == (-1.0, -2.0, 0.0)
    assert p.read_bytes().startswith(b"# vtk DataFile Version 3.0")
