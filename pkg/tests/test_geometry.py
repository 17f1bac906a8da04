import math

import pytest
from hypothesis import given, settings, strategies as st

from planar_em.geometry import (
    Bounds,
    EbgParams,
    GeometryError,
    Layer,
    LayerShape,
    Layout,
    MimoParams,
    Port,
    SirAntennaParams,
    StackUp,
    add_ebg,
    build_mimo,
    build_single,
    dumps_layout,
    layout_area,
    loads_layout,
    mirror_layout,
    quarter_wave_spacing,
)
from conftest import rect


def test_stackup_defaults():
    s = StackUp()
    assert (s.eps_r, s.loss_tangent, s.thickness) == (3.66, 0.004, 0.508)


@pytest.mark.parametrize("kw", [dict(eps_r=0.5), dict(loss_tangent=-0.1), dict(thickness=0)])
def test_stackup_invariants(kw):
    with pytest.raises(GeometryError):
        StackUp(**kw)


def test_single_feed_width_is_w1():
    lay = build_single()
    feed = next(s for s in lay.shapes if s.name == "feed")
    x0, _, x1, _ = feed.extent
    assert x1 - x0 == pytest.approx(1.07, abs=1e-9)


def test_single_identity_scaling():
    p = SirAntennaParams()
    assert build_single(p.scaled_widths(1.0)).shapes == build_single(p).shapes


def test_cascade_length_from_polygon_extents():
    lay = build_single()
    top = lay.on_layer(Layer.TOP_METAL)
    # independent oracle: sum of each emitted polygon's y-extent
    total = sum(s.extent[3] - s.extent[1] for s in top)
    assert total == pytest.approx(17.5 + 2 + 2.5 + 2.5 + 4 + 4 + 4 + 16.3, abs=1e-9)
    assert max(s.extent[3] for s in top) - min(s.extent[1] for s in top) == pytest.approx(52.8)


def test_single_has_one_port_and_full_ground():
    lay = build_single()
    assert len(lay.ports) == 1
    (g,) = lay.on_layer(Layer.GROUND)
    assert g.extent == (lay.bounds.x0, lay.bounds.y0, lay.bounds.x1, lay.bounds.y1)


def test_shape_outside_bounds_names_shape():
    shapes = [LayerShape(Layer.TOP_METAL, rect(0, 0, 5, 50), "too_long"),
              LayerShape(Layer.GROUND, rect(0, 0, 10, 10), "ground")]
    with pytest.raises(GeometryError) as e:
        Layout(StackUp(), shapes, [Port(1, 1, 1)], Bounds(0, 0, 10, 10)).validate()
    assert e.value.shape_id == "too_long"


def test_quarter_wave_spacing():
    assert quarter_wave_spacing(2.5e9) == pytest.approx(30.0)
    # the same distance in wavelengths at 5.8 GHz
    assert 30.0 / (3e8 / 5.8e9 * 1e3) == pytest.approx(0.58, abs=0.005)


def test_mimo_centre_distance():
    lay = build_mimo()
    r1 = next(s for s in lay.shapes if s.name == "e1.radiator")
    r2 = next(s for s in lay.shapes if s.name == "e2.radiator")
    c1 = (r1.extent[0] + r1.extent[2]) / 2
    c2 = (r2.extent[0] + r2.extent[2]) / 2
    assert c2 - c1 == pytest.approx(30.0)
    assert len(lay.ports) == 2


def test_mimo_mirror_maps_shapes_and_ports():
    lay = build_mimo()
    m = mirror_layout(lay)
    key = lambda s: (s.layer, s.polygon)
    assert sorted(map(key, m.shapes)) == sorted(map(key, lay.shapes))
    assert [(p.id, p.x, p.y) for p in m.ports] == [(p.id, p.x, p.y) for p in lay.ports]


def test_mimo_spacing_too_small():
    with pytest.raises(GeometryError):
        build_mimo(mimo=MimoParams(element_spacing=5.0))


def test_ebg_patch_area():
    lay = add_ebg(build_mimo(), EbgParams(n_rows=1))
    patches = lay.on_layer(Layer.EBG_PATCH)
    assert patches
    for p in patches:
        assert p.as_polygon().area == pytest.approx(8.0)


def test_ebg_zero_rows_identity():
    lay = build_mimo()
    assert add_ebg(lay, EbgParams(n_rows=0)) is lay


def test_ebg_three_rows_count():
    ebg = EbgParams(n_rows=3)
    lay = add_ebg(build_mimo(), ebg)
    patches = lay.on_layer(Layer.EBG_PATCH)
    n_cols = len({p.extent[0] for p in patches})
    assert len(patches) == 3 * n_cols


def test_ebg_keeps_top_metal_and_ports():
    base = build_mimo()
    lay = add_ebg(base, EbgParams(n_rows=3))
    assert lay.on_layer(Layer.TOP_METAL) == base.on_layer(Layer.TOP_METAL)
    assert lay.ports == base.ports


def test_ebg_too_large():
    with pytest.raises(GeometryError):
        add_ebg(build_mimo(), EbgParams(n_rows=40))


def test_ebg_mirror_symmetric():
    lay = add_ebg(build_mimo(), EbgParams(n_rows=3))
    m = mirror_layout(lay)
    key = lambda s: (s.layer, s.polygon)
    assert sorted(map(key, m.shapes)) == sorted(map(key, lay.shapes))


def _layout_with(shapes):
    shapes = list(shapes) + [LayerShape(Layer.GROUND, rect(0, 0, 20, 20), "ground")]
    return Layout(StackUp(), shapes, [Port(1, 1, 1)], Bounds(0, 0, 20, 20))


def test_layout_area_cases():
    assert layout_area(_layout_with([]), Layer.TOP_METAL) == 0
    one = _layout_with([LayerShape(Layer.TOP_METAL, rect(1, 1, 5, 3), "a")])
    assert layout_area(one, Layer.TOP_METAL) == pytest.approx(8)


def test_layout_area_overlap_against_raster():
    import numpy as np

    a = rect(1, 1, 5, 3)
    b = rect(3, 1, 7, 3)
    lay = _layout_with([LayerShape(Layer.TOP_METAL, a, "a"), LayerShape(Layer.TOP_METAL, b, "b")])
    # raster oracle at 0.01 mm: count sample centres inside either rectangle
    h = 0.01
    xs = np.arange(0, 10, h) + h / 2
    ys = np.arange(0, 5, h) + h / 2
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    inside = ((X > 1) & (X < 5) & (Y > 1) & (Y < 3)) | ((X > 3) & (X < 7) & (Y > 1) & (Y < 3))
    raster = inside.sum() * h * h
    assert layout_area(lay, Layer.TOP_METAL) == pytest.approx(12)
    assert raster == pytest.approx(12, abs=0.05)


@pytest.mark.parametrize("builder", [
    lambda: build_single(),
    lambda: build_mimo(),
    lambda: add_ebg(build_mimo(), EbgParams(n_rows=3)),
])
def test_scene_round_trip_byte_identical(builder):
    lay = builder()
    text = dumps_layout(lay)
    back = loads_layout(text)
    assert dumps_layout(back) == text
    assert back == lay


def test_determinism():
    assert dumps_layout(build_mimo()) == dumps_layout(build_mimo())


def test_vertex_order_canonical():
    a = LayerShape(Layer.TOP_METAL, [(0, 0), (1, 0), (1, 1), (0, 1)], "x")
    b = LayerShape(Layer.TOP_METAL, [(1, 1), (1, 0), (0, 0), (0, 1)], "x")
    assert a.polygon == b.polygon


def test_self_intersecting_polygon_rejected():
    with pytest.raises(GeometryError):
        LayerShape(Layer.TOP_METAL, [(0, 0), (1, 1), (1, 0), (0, 1)], "bowtie")


@settings(max_examples=25, deadline=None)
@given(spacing=st.floats(20, 45), run=st.floats(8, 16), rise=st.floats(2, 8))
def test_mimo_properties(spacing, run, rise):
    from planar_em.geometry import BendSpec

    lay = build_mimo(mimo=MimoParams(element_spacing=spacing, bend=BendSpec(rise=rise, run=run)))
    for s in lay.shapes:
        assert lay.bounds.contains(*s.extent)
    m = mirror_layout(lay)
    key = lambda s: (s.layer, s.polygon)
    assert sorted(map(key, m.shapes)) == sorted(map(key, lay.shapes))
    assert dumps_layout(loads_layout(dumps_layout(lay))) == dumps_layout(lay)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(2, 6), b=st.floats(1, 3), rows=st.sampled_from([1, 3]))
def test_ebg_properties(a, b, rows):
    try:
        lay = add_ebg(build_mimo(), EbgParams(a=a, b=b, n_rows=rows))
    except GeometryError:
        return
    patches = lay.on_layer(Layer.EBG_PATCH)
    assert len(patches) % rows == 0
    for p in patches:
        assert p.as_polygon().area == pytest.approx(round(a, 6) * round(b, 6), rel=1e-5)


def test_truncated_ground_option():
    from planar_em.geometry import GeometryError, Layer, SirAntennaParams, build_single

    full = build_single()
    part = build_single(SirAntennaParams(ground_l=20.0))
    g_full = full.on_layer(Layer.GROUND)[0].extent
    g_part = part.on_layer(Layer.GROUND)[0].extent
    assert g_full[3] == full.bounds.y1
    assert g_part[3] == 20.0 and part.bounds == full.bounds
    assert part.on_layer(Layer.TOP_METAL) == full.on_layer(Layer.TOP_METAL)
    with pytest.raises(GeometryError):
        build_single(SirAntennaParams(ground_l=100.0))
