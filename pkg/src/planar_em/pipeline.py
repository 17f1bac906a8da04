"""geometry -> grid -> time-domain runs -> S-parameters, maps and patterns."""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .fdtd.monitors import NtffMonitor, SurfaceCurrentMonitor
from .fdtd.solver import PortRecord, Solver, resolve_ports
from .geometry import (
    BendSpec,
    EbgParams,
    GeometryError,
    Layout,
    MimoParams,
    SirAntennaParams,
    add_ebg,
    build_mimo,
    build_single,
    dumps_layout,
)
from .grid import ResourceGuardError, estimate_cells, voxelize
from .postproc.currents import surface_current_map
from .postproc.ntff import accepted_power, far_field
from .postproc.sparams import SParamMatrix, extract_sparams, mirror_run
from .postproc.spectra import port_spectra
from .presets import Preset, default_freqs, get_preset

log = logging.getLogger(__name__)

__all__ = [
    "VARIANTS",
    "OverrideError",
    "MonitorRequest",
    "SimulationResult",
    "build_variant",
    "apply_overrides",
    "parse_monitor",
    "estimate_resources",
    "simulate",
    "save_runs",
    "load_runs",
    "config_hash",
]

VARIANTS = ("single", "mimo", "mimo_ebg1", "mimo_ebg3")
BYTES_PER_CELL = 46          # six float32 fields, edge ids, material and flag arrays
MEMORY_LIMIT = 8e9
STEP_LIMIT = 200_000


class OverrideError(ValueError):
    """Unknown or malformed geometry override."""


@dataclass
class VariantParams:
    sir: SirAntennaParams = field(default_factory=SirAntennaParams)
    mimo: MimoParams = field(default_factory=MimoParams)
    ebg: EbgParams | None = None


_SECTIONS = {"sir": "sir", "mimo": "mimo", "bend": "bend", "ebg": "ebg"}


def _coerce(cls, name, raw):
    f = {x.name: x for x in fields(cls)}.get(name)
    if f is None:
        raise OverrideError(f"unknown parameter {name!r} for {cls.__name__}")
    cur = getattr(cls(), name)
    if isinstance(raw, str):
        s = raw.strip()
        if isinstance(cur, bool):
            if s.lower() not in ("true", "false"):
                raise OverrideError(f"{name}: expected true/false, got {raw!r}")
            return s.lower() == "true"
        if isinstance(cur, tuple):
            return tuple(float(v) for v in s.split(","))
        if s.lower() == "none":
            return None
        try:
            return int(s) if isinstance(cur, int) or (cur is None and re.fullmatch(r"-?\d+", s)) else float(s)
        except ValueError:
            raise OverrideError(f"{name}: expected a number, got {raw!r}") from None
    return raw


def apply_overrides(params: VariantParams, overrides: dict) -> VariantParams:
    """Apply ``{"sir.l1": 17.0, "ebg.a": 5, "bend.rise": 4}`` style overrides."""
    sir, mimo, ebg = params.sir, params.mimo, params.ebg
    bend = mimo.bend
    updates = {"sir": {}, "mimo": {}, "bend": {}, "ebg": {}}
    for key, raw in overrides.items():
        sec, _, name = key.partition(".")
        if sec not in updates or not name:
            raise OverrideError(f"unknown parameter {key!r}")
        cls = {"sir": SirAntennaParams, "mimo": MimoParams, "bend": BendSpec, "ebg": EbgParams}[sec]
        updates[sec][name] = _coerce(cls, name, raw)
    try:
        if updates["sir"]:
            sir = replace(sir, **updates["sir"])
        if updates["bend"]:
            bend = replace(bend, **updates["bend"])
        if updates["mimo"] or updates["bend"]:
            mimo = replace(mimo, bend=bend, **updates["mimo"])
        if updates["ebg"]:
            ebg = replace(ebg or EbgParams(), **updates["ebg"])
    except GeometryError:
        raise
    return VariantParams(sir, mimo, ebg)


def build_variant(variant: str, overrides: dict | None = None) -> Layout:
    """Layout of a named variant with optional parameter overrides."""
    if variant not in VARIANTS:
        raise OverrideError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
    base = VariantParams()
    if variant == "mimo_ebg1":
        base.ebg = EbgParams(n_rows=1)
    elif variant == "mimo_ebg3":
        base.ebg = EbgParams(n_rows=3)
    p = apply_overrides(base, overrides or {})
    if variant == "single":
        if p.ebg is not None:
            raise OverrideError("EBG parameters apply to MIMO variants only")
        return build_single(p.sir).validate()
    layout = build_mimo(p.sir, p.mimo)
    if p.ebg is not None:
        layout = add_ebg(layout, p.ebg)
    return layout.validate()


# ---------------------------------------------------------------------------

_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}


def parse_frequency(text: str) -> float:
    m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*([A-Za-z]*)\s*", text)
    if not m:
        raise ValueError(f"bad frequency {text!r}")
    unit = m.group(2).lower() or "hz"
    if unit not in _UNITS:
        raise ValueError(f"bad frequency unit in {text!r}")
    return float(m.group(1)) * _UNITS[unit]


@dataclass(frozen=True)
class MonitorRequest:
    kind: str            # "surface" or "farfield"
    freqs: tuple
    layer: str = "TOP_METAL"


def parse_monitor(text: str) -> MonitorRequest:
    """``surface:2.5GHz``, ``surface@GROUND:2.5GHz,5.5GHz`` or ``farfield:5.5GHz``."""
    head, sep, tail = text.partition(":")
    if not sep:
        raise ValueError(f"monitor spec {text!r} needs KIND:FREQ[,FREQ...]")
    kind, _, layer = head.partition("@")
    kind = kind.strip().lower()
    if kind not in ("surface", "farfield"):
        raise ValueError(f"unknown monitor kind {kind!r}")
    freqs = tuple(parse_frequency(f) for f in tail.split(",") if f.strip())
    if not freqs:
        raise ValueError("monitor needs at least one frequency")
    return MonitorRequest(kind, freqs, layer.strip().upper() or "TOP_METAL")


def estimate_resources(layout: Layout, preset: Preset):
    cells = estimate_cells(layout, preset.grid)
    return {"cells": cells, "bytes": cells * BYTES_PER_CELL, "max_steps": preset.sim.max_steps}


def check_resources(layout, preset, force=False):
    est = estimate_resources(layout, preset)
    if not force and (est["bytes"] > MEMORY_LIMIT or est["max_steps"] > STEP_LIMIT):
        raise ResourceGuardError(
            f"run needs ~{est['bytes'] / 1e9:.2f} GB for {est['cells']} cells and up to "
            f"{est['max_steps']} steps (limits {MEMORY_LIMIT / 1e9:g} GB, {STEP_LIMIT} steps); "
            "use --force to override", est["cells"])
    return est


def config_hash(layout: Layout, preset: Preset) -> str:
    h = hashlib.sha256()
    h.update(dumps_layout(layout).encode())
    h.update(repr(preset).encode())
    h.update(__version__.encode())
    return h.hexdigest()[:16]


@dataclass
class SimulationResult:
    sparams: SParamMatrix
    runs: list
    surface: dict = field(default_factory=dict)        # freq -> SurfaceCurrentMap
    patterns: dict = field(default_factory=dict)       # freq -> FarFieldPattern
    steps: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    grid_shape: tuple = ()
    spacing: tuple = ()
    config_hash: str = ""


def _run_one(grid, ports, preset, excite, monitors):
    solver = Solver(grid, ports, preset.sim, excite, monitors)
    res = solver.run()
    return res


def simulate(layout: Layout, preset: Preset | str = "coarse", freqs=None, monitors=(),
             symmetry: str = "full", force: bool = False, run_cache=None) -> SimulationResult:
    """Excite every port in turn and extract the S-matrix.

    ``symmetry="mirror"`` runs port 1 only and synthesizes the port-2 run by
    relabelling, which is valid for mirror-symmetric layouts.  ``run_cache``
    is an optional path; when it exists its runs are loaded instead of
    simulated, otherwise the fresh runs are stored there.
    """
    if isinstance(preset, str):
        preset = get_preset(preset)
    freqs = default_freqs() if freqs is None else np.asarray(freqs, dtype=float)
    check_resources(layout, preset, force)
    grid = voxelize(layout, preset.grid)
    ports = resolve_ports(grid, preset.sim.reference_impedance)
    ids = sorted(p.id for p in ports)
    if symmetry not in ("full", "mirror"):
        raise ValueError(f"symmetry must be 'full' or 'mirror', got {symmetry!r}")
    if symmetry == "mirror" and (layout.symmetry_x is None or ids != [1, 2]):
        raise ValueError("mirror shortcut needs a two-port layout with a symmetry plane")
    chash = config_hash(layout, preset)

    mon_objs = []
    for req in monitors:
        if req.kind == "surface":
            mon_objs.append(SurfaceCurrentMonitor(req.freqs, req.layer))
        else:
            mon_objs.append(NtffMonitor(req.freqs))

    cached = None
    if run_cache is not None and Path(run_cache).exists() and not mon_objs:
        cached = load_runs(run_cache)
        if cached["config_hash"] != chash:
            log.warning("ignoring run cache %s: configuration changed", run_cache)
            cached = None

    runs, steps, conv = [], [], []
    if cached is not None:
        runs, steps, conv = cached["runs"], cached["steps"], cached["converged"]
    else:
        to_run = ids[:1] if symmetry == "mirror" else ids
        for n, pid in enumerate(to_run):
            res = _run_one(grid, ports, preset, pid, mon_objs if n == 0 else ())
            runs.append(res.records)
            steps.append(res.steps)
            conv.append(res.converged)
        if symmetry == "mirror":
            runs.append(mirror_run(runs[0]))
        if run_cache is not None:
            save_runs(run_cache, runs, steps, conv, chash)

    s = extract_sparams(*runs, freqs=freqs, z_ref=preset.sim.reference_impedance)
    out = SimulationResult(s, runs, steps=steps, converged=conv, grid_shape=grid.shape,
                           spacing=grid.spacing, config_hash=chash)
    drive = runs[0]
    for m in mon_objs:
        for f in m.freqs:
            if isinstance(m, SurfaceCurrentMonitor):
                out.surface[float(f)] = surface_current_map(m, f)
            else:
                rec = next(r for r in drive.values() if r.excited)
                v, i = port_spectra(rec, [f])
                out.patterns[float(f)] = far_field(m.surface_data(f), f, accepted_power(v[0], i[0]))
    return out


# ---------------------------------------------------------------------------
# Run persistence (npz with a JSON manifest)

def save_runs(path, runs, steps, converged, chash=""):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays, manifest = {}, []
    for r, run in enumerate(runs):
        for pid, rec in run.items():
            arrays[f"r{r}_p{pid}_v"] = rec.v
            arrays[f"r{r}_p{pid}_i"] = rec.i
            manifest.append(dict(run=r, port=pid, dt=rec.dt, excited=rec.excited,
                                 v_t0=rec.v_t0, i_t0=rec.i_t0, band=list(rec.band) if rec.band else None,
                                 impedance=rec.impedance))
    meta = dict(records=manifest, steps=list(map(int, steps)), converged=list(map(bool, converged)),
                config_hash=chash, n_runs=len(runs))
    arrays["manifest"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    tmp = path.with_name(path.name + ".tmp.npz")
    np.savez_compressed(tmp, **arrays)
    tmp.replace(path)


def load_runs(path):
    with np.load(path) as z:
        meta = json.loads(bytes(z["manifest"]).decode())
        runs = [dict() for _ in range(meta["n_runs"])]
        for m in meta["records"]:
            key = f"r{m['run']}_p{m['port']}"
            runs[m["run"]][m["port"]] = PortRecord(
                m["port"], m["dt"], z[key + "_v"], z[key + "_i"], m["excited"],
                m["v_t0"], m["i_t0"], tuple(m["band"]) if m["band"] else None, m["impedance"])
    return dict(runs=runs, steps=meta["steps"], converged=meta["converged"],
                config_hash=meta["config_hash"])
