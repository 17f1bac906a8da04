"""Parametric layouts of the SIR microstrip antenna, its 2-element MIMO
arrangement and the ground-side EBG loading.

Board coordinates are millimetres.  x runs across the board, y along it,
the substrate normal is +z and the origin sits at a board corner.  The
ground plane lives at z = 0 and the top metal at z = substrate thickness.
All vertex coordinates are rounded to 6 decimals on construction so that
a serialized layout parses back to an identical object.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace

import shapely
from shapely.geometry import Polygon

from .config import Config, ConfigError, format_config, parse_config

__all__ = [
    "C0",
    "GeometryError",
    "Layer",
    "StackUp",
    "LayerShape",
    "Port",
    "Bounds",
    "Layout",
    "SirAntennaParams",
    "MimoParams",
    "EbgParams",
    "build_single",
    "build_patch",
    "build_mimo",
    "add_ebg",
    "layout_area",
    "mirror_layout",
    "dumps_layout",
    "loads_layout",
    "quarter_wave_spacing",
]

C0 = 299_792_458.0
SCENE_FORMAT_VERSION = 1


class GeometryError(ValueError):
    """Invalid geometry; ``shape_id`` names the offending shape if any."""

    def __init__(self, message, shape_id=None):
        super().__init__(message if shape_id is None else f"{message} [shape {shape_id}]")
        self.shape_id = shape_id


class Layer(str, enum.Enum):
    TOP_METAL = "TOP_METAL"
    GROUND = "GROUND"
    EBG_PATCH = "EBG_PATCH"

    @property
    def on_ground_plane(self) -> bool:
        return self is not Layer.TOP_METAL


def _canonical_ring(pts):
    """Counter-clockwise, starting at the smallest vertex."""
    area2 = sum(x0 * y1 - x1 * y0 for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]))
    if area2 < 0:
        pts = pts[::-1]
    k = min(range(len(pts)), key=lambda i: pts[i])
    return pts[k:] + pts[:k]


def _r(x) -> float:
    v = round(float(x), 6)
    return v + 0.0  # folds -0.0


@dataclass(frozen=True)
class StackUp:
    """Single-substrate stack with zero-thickness metal on both faces."""

    eps_r: float = 3.66
    loss_tangent: float = 0.004
    thickness: float = 0.508
    metal_model: str = "pec"

    def __post_init__(self):
        if not self.eps_r >= 1.0:
            raise GeometryError(f"eps_r must be >= 1, got {self.eps_r}")
        if not self.loss_tangent >= 0.0:
            raise GeometryError(f"loss_tangent must be >= 0, got {self.loss_tangent}")
        if not self.thickness > 0.0:
            raise GeometryError(f"thickness must be > 0, got {self.thickness}")
        if self.metal_model != "pec":
            raise GeometryError(f"unsupported metal model {self.metal_model!r}")


@dataclass(frozen=True)
class LayerShape:
    layer: Layer
    polygon: tuple
    name: str = ""

    def __post_init__(self):
        pts = tuple((_r(x), _r(y)) for x, y in self.polygon)
        if len(pts) >= 2 and pts[0] == pts[-1]:
            pts = pts[:-1]
        if len(pts) < 3:
            raise GeometryError("polygon needs at least 3 vertices", self.name)
        pts = _canonical_ring(pts)
        object.__setattr__(self, "polygon", pts)
        object.__setattr__(self, "layer", Layer(self.layer))
        if not all(math.isfinite(c) for p in pts for c in p):
            raise GeometryError("non-finite vertex", self.name)
        poly = Polygon(pts)
        if not poly.is_valid or poly.area <= 0.0:
            raise GeometryError("polygon is not simple", self.name)

    def as_polygon(self) -> Polygon:
        return Polygon(self.polygon)

    @property
    def extent(self):
        xs = [p[0] for p in self.polygon]
        ys = [p[1] for p in self.polygon]
        return min(xs), min(ys), max(xs), max(ys)


@dataclass(frozen=True)
class Port:
    """Coaxial feed location; resolved to a vertical grid-edge column later."""

    id: int
    x: float
    y: float
    impedance: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "x", _r(self.x))
        object.__setattr__(self, "y", _r(self.y))
        if not self.impedance > 0:
            raise GeometryError(f"port {self.id}: impedance must be > 0")


@dataclass(frozen=True)
class Bounds:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _r(getattr(self, f.name)))
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise GeometryError(f"degenerate bounds {self}")

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def length(self):
        return self.y1 - self.y0

    def contains(self, x0, y0, x1, y1, tol=1e-9) -> bool:
        return (x0 >= self.x0 - tol and y0 >= self.y0 - tol
                and x1 <= self.x1 + tol and y1 <= self.y1 + tol)


@dataclass(frozen=True)
class Layout:
    stackup: StackUp
    shapes: tuple
    ports: tuple
    bounds: Bounds
    symmetry_x: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        object.__setattr__(self, "ports", tuple(self.ports))
        if self.symmetry_x is not None:
            object.__setattr__(self, "symmetry_x", _r(self.symmetry_x))

    def on_layer(self, layer) -> list:
        layer = Layer(layer)
        return [s for s in self.shapes if s.layer is layer]

    def validate(self) -> "Layout":
        for s in self.shapes:
            if not self.bounds.contains(*s.extent):
                raise GeometryError("shape outside board bounds", s.name)
        if not self.ports:
            raise GeometryError("layout has no ports")
        ids = [p.id for p in self.ports]
        if len(set(ids)) != len(ids):
            raise GeometryError(f"duplicate port ids {ids}")
        top = [s.as_polygon() for s in self.on_layer(Layer.TOP_METAL)]
        gnd = [s.as_polygon() for s in self.on_layer(Layer.GROUND)]
        for p in self.ports:
            if not any(shapely.intersects_xy(poly, p.x, p.y) for poly in top):
                raise GeometryError(f"port {p.id} does not touch top metal")
            if not any(shapely.intersects_xy(poly, p.x, p.y) for poly in gnd):
                raise GeometryError(f"port {p.id} does not touch the ground layer")
        return self


def quarter_wave_spacing(freq_hz: float, fraction: float = 0.25, c: float = 3.0e8) -> float:
    """``fraction`` of the free-space wavelength at ``freq_hz``, in mm."""
    return fraction * c / freq_hz * 1e3


def _rect(x0, y0, x1, y1):
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


# ---------------------------------------------------------------------------
# Single element
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SirAntennaParams:
    """Element dimensions in mm; defaults are the optimized values of the
    original design.

    The chain runs feed (w1 x l1) -> SIR sections (w2..w7 x l2..l7) ->
    radiator (radiator_w x lp).  ``w8`` is carried for completeness but no
    canonical shape uses it.  ``offsets`` shifts sections 1..7 and the
    radiator sideways from the chain axis.  ``ground_l`` truncates the
    ground plane at that distance from the feed edge (None keeps a full
    ground under the whole board).
    """

    l1: float = 17.5
    l2: float = 2.0
    l3: float = 2.5
    l4: float = 2.5
    l5: float = 4.0
    l6: float = 4.0
    l7: float = 4.0
    lp: float = 16.3
    w1: float = 1.07
    w2: float = 0.4
    w3: float = 2.8
    w4: float = 2.265
    w5: float = 2.5
    w6: float = 0.5
    w7: float = 0.5
    w8: float = 0.5
    radiator_w: float = 10.0
    board_w: float = 36.0
    board_l: float | None = None
    ground_l: float | None = None
    top_margin: float = 2.0
    port_inset: float = 0.5
    offsets: tuple = (0.0,) * 8

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("offsets", "board_l", "ground_l"):
                continue
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise GeometryError(f"{f.name} must be a positive number, got {v!r}")
        if self.board_l is not None and not self.board_l > 0:
            raise GeometryError(f"board_l must be positive, got {self.board_l!r}")
        if self.ground_l is not None and not self.ground_l > 0:
            raise GeometryError(f"ground_l must be positive, got {self.ground_l!r}")
        offs = tuple(float(o) for o in self.offsets)
        if len(offs) != 8 or not all(math.isfinite(o) for o in offs):
            raise GeometryError("offsets must be 8 finite numbers")
        object.__setattr__(self, "offsets", offs)
        if self.port_inset >= self.l1:
            raise GeometryError("port_inset must lie on the feed line")

    def sections(self):
        """(width, length) for the feed, SIR steps and radiator."""
        return [
            (self.w1, self.l1), (self.w2, self.l2), (self.w3, self.l3),
            (self.w4, self.l4), (self.w5, self.l5), (self.w6, self.l6),
            (self.w7, self.l7), (self.radiator_w, self.lp),
        ]

    @property
    def cascade_length(self) -> float:
        return sum(length for _, length in self.sections())

    @property
    def footprint_width(self) -> float:
        return max(w + 2 * abs(o) for (w, _), o in zip(self.sections(), self.offsets))

    def scaled_widths(self, factor: float) -> "SirAntennaParams":
        kw = {f"w{i}": getattr(self, f"w{i}") * factor for i in range(1, 9)}
        kw["radiator_w"] = self.radiator_w * factor
        return replace(self, **kw)


_SECTION_NAMES = ("feed", "sir2", "sir3", "sir4", "sir5", "sir6", "sir7", "radiator")


def _chain(params: SirAntennaParams, xc: float, y0: float, skip_feed: bool, prefix=""):
    shapes = []
    y = y0
    for idx, ((w, length), off, name) in enumerate(
            zip(params.sections(), params.offsets, _SECTION_NAMES)):
        if idx == 0 and skip_feed:
            continue
        cx = xc + off
        shapes.append(LayerShape(Layer.TOP_METAL, _rect(cx - w / 2, y, cx + w / 2, y + length),
                                 prefix + name))
        y += length
    return shapes, y


def _ground_end(params: SirAntennaParams, board_l: float) -> float:
    if params.ground_l is None:
        return board_l
    if params.ground_l > board_l:
        raise GeometryError(f"ground_l {params.ground_l} exceeds the board length {board_l}", "ground")
    return params.ground_l


def build_single(params: SirAntennaParams | None = None, stackup: StackUp | None = None) -> Layout:
    """One edge-fed SIR element over a full ground plane, one port."""
    params = params or SirAntennaParams()
    stackup = stackup or StackUp()
    board_l = params.board_l if params.board_l is not None else params.cascade_length + params.top_margin
    bounds = Bounds(0.0, 0.0, params.board_w, board_l)
    xc = params.board_w / 2
    shapes, _ = _chain(params, xc, 0.0, skip_feed=False)
    shapes.append(LayerShape(Layer.GROUND, _rect(0.0, 0.0, params.board_w, _ground_end(params, board_l)),
                             "ground"))
    port = Port(1, xc + params.offsets[0], params.port_inset)
    return Layout(stackup, shapes, [port], bounds).validate()


def build_patch(length: float = 28.0, width: float = 36.0, margin: float = 6.0,
                feed_inset: float | None = None, stackup: StackUp | None = None) -> Layout:
    """Rectangular probe-fed patch over a full ground, used to validate the
    solver against the cavity model.  The probe sits on the centre line at
    ``feed_inset`` from the radiating edge (default length / 4), which keeps
    the orthogonal mode unexcited."""
    if not (length > 0 and width > 0 and margin > 0):
        raise GeometryError("patch length, width and margin must be positive")
    stackup = stackup or StackUp()
    inset = length / 4 if feed_inset is None else feed_inset
    if not 0 < inset < length:
        raise GeometryError(f"feed_inset {inset} is off the patch")
    bw, bl = width + 2 * margin, length + 2 * margin
    shapes = [
        LayerShape(Layer.TOP_METAL, _rect(margin, margin, margin + width, margin + length), "patch"),
        LayerShape(Layer.GROUND, _rect(0.0, 0.0, bw, bl), "ground"),
    ]
    port = Port(1, bw / 2, margin + inset)
    return Layout(stackup, shapes, [port], Bounds(0.0, 0.0, bw, bl), symmetry_x=bw / 2).validate()


# ---------------------------------------------------------------------------
# Two-element MIMO
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BendSpec:
    """90-degree feed bend: ``rise`` is the straight run from the bend to
    the first SIR section, ``run`` the horizontal run from the element axis
    to the board side, ``feed_y`` the centre line of the horizontal run."""

    rise: float = 5.0
    run: float = 12.5
    feed_y: float = 2.0
    mitered: bool = True


@dataclass(frozen=True)
class MimoParams:
    element_spacing: float = quarter_wave_spacing(2.5e9)
    bend: BendSpec = field(default_factory=BendSpec)
    min_gap: float = 1.0

    def __post_init__(self):
        if not self.element_spacing > 0:
            raise GeometryError(f"element_spacing must be > 0, got {self.element_spacing}")


def _bend_feed(xc, w, bend: BendSpec, y_top, name):
    """L-shaped feed from the left board edge (x = xc - run) up to y_top."""
    h = w / 2
    x_edge = xc - bend.run
    yb, yt = bend.feed_y - h, bend.feed_y + h
    outer = (xc + h, yb)
    if bend.mitered:
        m = min(w, y_top - yb) * 0.9
        corner = ((xc + h - m, yb), (xc + h, yb + m))
    else:
        corner = (outer,)
    pts = ((x_edge, yb),) + corner + ((xc + h, y_top), (xc - h, y_top), (xc - h, yt), (x_edge, yt))
    return LayerShape(Layer.TOP_METAL, pts, name)


def mirror_shape(shape: LayerShape, x_mirror: float, name=None) -> LayerShape:
    pts = tuple((2 * x_mirror - x, y) for x, y in reversed(shape.polygon))
    return LayerShape(shape.layer, pts, shape.name if name is None else name)


def build_mimo(params: SirAntennaParams | None = None, mimo: MimoParams | None = None,
               stackup: StackUp | None = None) -> Layout:
    """Two mirror-image elements whose feeds bend out to the board sides."""
    params = params or SirAntennaParams()
    mimo = mimo or MimoParams()
    stackup = stackup or StackUp()
    bend = mimo.bend
    s = mimo.element_spacing
    if s < params.footprint_width + mimo.min_gap:
        raise GeometryError(
            f"element spacing {s} mm too small for element footprint {params.footprint_width} mm")
    if bend.run <= params.w1 / 2 + params.port_inset:
        raise GeometryError("feed bend run too short for the port")
    if bend.feed_y < params.w1 / 2:
        raise GeometryError("feed_y puts the feed line off the board")
    # keep the mirror plane on the 1e-6 mm lattice so reflection is exact
    x_mid = _r((s + 2 * bend.run) / 2)
    board_w = 2 * x_mid
    xc1 = bend.run
    y0 = bend.feed_y + bend.rise
    e1, y_end = _chain(params, xc1, y0, skip_feed=True, prefix="e1.")
    e1.insert(0, _bend_feed(xc1 + params.offsets[0], params.w1, bend, y0, "e1.feed"))
    board_l = params.board_l if params.board_l is not None else y_end + params.top_margin
    e2 = [mirror_shape(sh, x_mid, "e2." + sh.name[3:]) for sh in e1]
    ground = LayerShape(Layer.GROUND, _rect(0.0, 0.0, board_w, _ground_end(params, board_l)), "ground")
    ports = [Port(1, params.port_inset, bend.feed_y), Port(2, board_w - params.port_inset, bend.feed_y)]
    return Layout(stackup, e1 + e2 + [ground], ports, Bounds(0.0, 0.0, board_w, board_l),
                  symmetry_x=x_mid).validate()


def mirror_layout(layout: Layout) -> Layout:
    """Reflect about the symmetry plane and swap port ids 1 and 2."""
    if layout.symmetry_x is None:
        raise GeometryError("layout has no symmetry plane")
    xm = layout.symmetry_x
    shapes = [mirror_shape(s, xm) for s in layout.shapes]
    swap = {1: 2, 2: 1}
    ports = [Port(swap.get(p.id, p.id), 2 * xm - p.x, p.y, p.impedance) for p in layout.ports]
    ports.sort(key=lambda p: p.id)
    return replace(layout, shapes=shapes, ports=ports)


# ---------------------------------------------------------------------------
# EBG loading
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EbgParams:
    """Semi-periodic patch array etched into the ground plane.

    ``a`` is the patch width (x) and ``b`` its length (y); neighbouring
    patches are separated by ``t1`` in x and ``t2`` in y, which is also the
    gap to the surrounding ground.  ``n_cols=None`` fills the region between
    the two elements; ``y_center=None`` centres the rows on the SIR sections.
    """

    a: float = 4.0
    b: float = 2.0
    t1: float = 0.5
    t2: float = 0.4
    n_rows: int = 1
    n_cols: int | None = None
    y_center: float | None = None
    clearance: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "t1", "t2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise GeometryError(f"EBG {name} must be > 0, got {v}")
        if self.n_rows < 0 or (self.n_cols is not None and self.n_cols < 1):
            raise GeometryError("EBG row/column counts must be non-negative")

    @property
    def pitch_x(self):
        return self.a + self.t1

    @property
    def pitch_y(self):
        return self.b + self.t2


def _free_span(layout: Layout, clearance: float):
    """x-interval between the two elements' top metal, shrunk by clearance."""
    xm = layout.symmetry_x
    inner_left = max(s.extent[2] for s in layout.on_layer(Layer.TOP_METAL) if s.name.startswith("e1."))
    half = xm - inner_left - clearance
    return xm - half, xm + half


def _sir_region(layout: Layout):
    ys = [s.extent for s in layout.on_layer(Layer.TOP_METAL)
          if s.name.startswith("e1.sir")]
    return min(e[1] for e in ys), max(e[3] for e in ys)


def add_ebg(layout: Layout, ebg: EbgParams | None = None) -> Layout:
    """Etch a window in the ground between the elements and fill it with
    ``n_rows x n_cols`` isolated a x b patches.  Top metal and ports are
    left as they are; the ground is re-expressed as the rectangles around
    the window."""
    ebg = ebg or EbgParams()
    if ebg.n_rows == 0:
        return layout
    if layout.symmetry_x is None or len(layout.ports) != 2:
        raise GeometryError("EBG loading needs a two-port MIMO layout")
    grounds = layout.on_layer(Layer.GROUND)
    if len(grounds) != 1:
        raise GeometryError("EBG loading expects a single unetched ground shape")
    gx0, gy0, gx1, gy1 = grounds[0].extent
    lo, hi = _free_span(layout, ebg.clearance)
    n_cols = ebg.n_cols
    if n_cols is None:
        n_cols = int(math.floor((hi - lo - 2 * ebg.t1 + ebg.t1) / ebg.pitch_x + 1e-9))
        if n_cols < 1:
            raise GeometryError("no room for an EBG column between the elements")
    if ebg.y_center is None:
        ya, yb = _sir_region(layout)
        y_center = (ya + yb) / 2
    else:
        y_center = ebg.y_center
    arr_w = n_cols * ebg.a + (n_cols - 1) * ebg.t1
    arr_h = ebg.n_rows * ebg.b + (ebg.n_rows - 1) * ebg.t2
    ax0 = layout.symmetry_x - arr_w / 2
    ay0 = y_center - arr_h / 2
    wx0, wx1 = ax0 - ebg.t1, ax0 + arr_w + ebg.t1
    wy0, wy1 = ay0 - ebg.t2, ay0 + arr_h + ebg.t2
    if not (wx0 > gx0 and wx1 < gx1 and wy0 > gy0 and wy1 < gy1):
        raise GeometryError("EBG array exceeds the ground extent", "ebg")

    ground_parts = [
        LayerShape(Layer.GROUND, _rect(gx0, gy0, gx1, wy0), "ground.below"),
        LayerShape(Layer.GROUND, _rect(gx0, wy1, gx1, gy1), "ground.above"),
        LayerShape(Layer.GROUND, _rect(gx0, wy0, wx0, wy1), "ground.left"),
        LayerShape(Layer.GROUND, _rect(wx1, wy0, gx1, wy1), "ground.right"),
    ]
    patches = []
    for r in range(ebg.n_rows):
        for c in range(n_cols):
            x0 = ax0 + c * ebg.pitch_x
            y0 = ay0 + r * ebg.pitch_y
            patches.append(LayerShape(Layer.EBG_PATCH, _rect(x0, y0, x0 + ebg.a, y0 + ebg.b),
                                      f"ebg.r{r}.c{c}"))
    others = [s for s in layout.shapes if s.layer is not Layer.GROUND]
    return replace(layout, shapes=others + ground_parts + patches).validate()


def layout_area(layout: Layout, layer) -> float:
    """Metal area on ``layer`` in mm^2, overlaps counted once."""
    polys = [s.as_polygon() for s in layout.on_layer(layer)]
    if not polys:
        return 0.0
    return float(shapely.union_all(polys).area)


# ---------------------------------------------------------------------------
# Scene text format
# ---------------------------------------------------------------------------

def _f6(x: float) -> str:
    return f"{x:.6f}"


def dumps_layout(layout: Layout) -> str:
    st = layout.stackup
    entries = [
        ("scene.version", str(SCENE_FORMAT_VERSION)),
        ("stackup.eps_r", _f6(st.eps_r)),
        ("stackup.loss_tangent", _f6(st.loss_tangent)),
        ("stackup.thickness", _f6(st.thickness)),
        ("stackup.metal", st.metal_model),
        ("bounds.x0", _f6(layout.bounds.x0)),
        ("bounds.y0", _f6(layout.bounds.y0)),
        ("bounds.x1", _f6(layout.bounds.x1)),
        ("bounds.y1", _f6(layout.bounds.y1)),
    ]
    if layout.symmetry_x is not None:
        entries.append(("symmetry.x", _f6(layout.symmetry_x)))
    for i, s in enumerate(layout.shapes):
        entries.append((f"shape.{i}.name", s.name))
        entries.append((f"shape.{i}.layer", s.layer.value))
        entries.append((f"shape.{i}.vertices", "; ".join(f"{_f6(x)} {_f6(y)}" for x, y in s.polygon)))
    for p in layout.ports:
        entries.append((f"port.{p.id}.x", _f6(p.x)))
        entries.append((f"port.{p.id}.y", _f6(p.y)))
        entries.append((f"port.{p.id}.impedance", _f6(p.impedance)))
    return format_config(entries, header=["planar-em scene"])


def loads_layout(text: str) -> Layout:
    cfg: Config = parse_config(text)
    version = cfg.get_int("scene.version")
    if version != SCENE_FORMAT_VERSION:
        raise ConfigError(f"unsupported scene version {version}")
    st = StackUp(cfg.get_float("stackup.eps_r"), cfg.get_float("stackup.loss_tangent"),
                 cfg.get_float("stackup.thickness"), cfg.get_str("stackup.metal"))
    bounds = Bounds(*(cfg.get_float(f"bounds.{k}") for k in ("x0", "y0", "x1", "y1")))
    shapes = []
    for idx in cfg.subsections("shape"):
        sec = cfg.section(f"shape.{idx}")
        verts = []
        for pair in sec.get_list("vertices", sep=";"):
            try:
                x, y = (float(v) for v in pair.split())
            except ValueError:
                raise ConfigError(f"shape.{idx}.vertices: bad vertex {pair!r}") from None
            verts.append((x, y))
        try:
            layer = Layer(sec.get_str("layer"))
        except ValueError:
            raise ConfigError(f"shape.{idx}.layer: unknown layer {sec['layer']!r}") from None
        shapes.append(LayerShape(layer, verts, sec.get("name", "")))
    ports = []
    for pid in cfg.subsections("port"):
        sec = cfg.section(f"port.{pid}")
        ports.append(Port(int(pid), sec.get_float("x"), sec.get_float("y"), sec.get_float("impedance")))
    sym = cfg.get_float("symmetry.x") if "symmetry.x" in cfg else None
    return Layout(st, shapes, ports, bounds, symmetry_x=sym).validate()
