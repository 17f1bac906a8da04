"""Parametric sweeps over geometry parameters and variant comparison.

Results directory::

    index.tsv            one line per finished point, appended in point order
    points/pNNNN.s2p     S-parameters of each successful point
    points/pNNNN.json    the full row (parameters, metrics, provenance)
    report.csv           every row, written when the sweep completes
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import Config, ConfigError, parse_config
from .geometry import dumps_layout
from .pipeline import (
    VARIANTS,
    OverrideError,
    build_variant,
    config_hash,
    estimate_resources,
    parse_frequency,
    simulate,
)
from .postproc.bands import band_report, dip_frequency, isolation_at
from .postproc.sparams import SParamMatrix
from .postproc.touchstone import write_s2p
from .presets import default_freqs, get_preset

log = logging.getLogger(__name__)

__all__ = [
    "SweepPlan",
    "SweepResult",
    "BudgetError",
    "load_plan",
    "parse_plan",
    "run_sweep",
    "point_metrics",
    "compare_variants",
    "VariantComparison",
    "LOW_BAND",
    "HIGH_BAND",
]

LOW_BAND = (2.4e9, 3.0e9)
HIGH_BAND = (5.0e9, 6.5e9)
REPORT_BAND = (2.0e9, 6.5e9)
INDEX_COLUMNS = ("point", "status", "params", "f_low_ghz", "f_high_ghz", "n_matched",
                 "min_isolation_db", "max_ecc", "iso_2p5_db", "iso_5p5_db", "s2p")


class BudgetError(RuntimeError):
    """Estimated sweep cost exceeds the configured budget."""

    def __init__(self, message, estimate_hours):
        super().__init__(message)
        self.estimate_hours = estimate_hours


@dataclass
class SweepPlan:
    variant: str
    axes: dict                         # name -> list of values (ordered)
    fixed: dict = field(default_factory=dict)
    preset: str = "coarse"
    symmetry: str = "full"
    budget_hours: float | None = 4.0
    throughput: float = 1.0e8          # cell-updates per second for cost estimates
    steps_estimate: int = 30_000
    name: str = "sweep"
    freqs: tuple | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if not self.axes:
            raise ConfigError("sweep plan needs at least one axis")
        for k, vals in self.axes.items():
            if not vals:
                raise ConfigError(f"axis {k!r} has no values")
        # every axis must name a real parameter
        probe = dict(self.fixed)
        probe.update({k: v[0] for k, v in self.axes.items()})
        try:
            build_variant(self.variant, probe)
        except OverrideError as e:
            raise ConfigError(str(e)) from None

    def points(self):
        names = list(self.axes)
        for combo in itertools.product(*(self.axes[n] for n in names)):
            yield dict(zip(names, combo))

    @property
    def n_points(self):
        return math.prod(len(v) for v in self.axes.values())

    def frequencies(self):
        if self.freqs is None:
            return default_freqs()
        lo, hi, step = self.freqs
        return default_freqs(lo, hi, step)


def _num(s: str):
    s = s.strip()
    try:
        return int(s)
    except ValueError:
        return float(s)


def parse_plan(text: str) -> SweepPlan:
    cfg = parse_config(text)
    axes = {k: [_num(v) for v in cfg.section("axis").get_list(k)] for k in cfg.section("axis")}
    fixed = {k: v for k, v in cfg.section("fixed").items()}
    sw = cfg.section("sweep")
    freqs = None
    if "freq.start" in sw:
        freqs = (parse_frequency(sw["freq.start"]), parse_frequency(sw["freq.stop"]),
                 parse_frequency(sw["freq.step"]))
    budget = sw.get("budget_hours", "4")
    return SweepPlan(
        variant=sw.get_str("variant"),
        axes=axes,
        fixed=fixed,
        preset=sw.get_str("preset", "coarse"),
        symmetry=sw.get_str("symmetry", "full"),
        budget_hours=None if budget.lower() == "none" else float(budget),
        throughput=sw.get_float("throughput", 1.0e8),
        steps_estimate=sw.get_int("steps_estimate", 30_000),
        name=sw.get_str("name", "sweep"),
        freqs=freqs,
    )


def load_plan(path) -> SweepPlan:
    return parse_plan(Path(path).read_text())


@dataclass
class SweepResult:
    rows: list
    provenance: dict

    def column(self, key):
        return [r.get(key) for r in self.rows]


def point_metrics(s: SParamMatrix) -> dict:
    """Resonance dips, band report and spot isolations of one point."""
    rep = band_report(s, REPORT_BAND)
    return {
        "f_low_ghz": dip_frequency(s, *LOW_BAND) / 1e9,
        "f_high_ghz": dip_frequency(s, *HIGH_BAND) / 1e9,
        "n_matched": len(rep.matched),
        "matched_ghz": ";".join(f"{a / 1e9:.4f}-{b / 1e9:.4f}" for a, b in rep.matched),
        "min_isolation_db": rep.min_isolation_db,
        "max_ecc": rep.max_ecc,
        "iso_2p5_db": isolation_at(s, 2.5e9),
        "iso_5p5_db": isolation_at(s, 5.5e9),
    }


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def _point_name(idx):
    return f"p{idx:04d}"


def _run_point(args):
    """Worker: simulate one point and write its files; returns the row."""
    idx, params, plan_dict, out_dir = args
    plan = SweepPlan(**plan_dict)
    out = Path(out_dir) / "points"
    name = _point_name(idx)
    overrides = dict(plan.fixed)
    overrides.update(params)
    row = {"point": idx, "params": params}
    try:
        layout = build_variant(plan.variant, overrides)
        preset = get_preset(plan.preset)
        row["config_hash"] = config_hash(layout, preset)
        res = simulate(layout, preset, plan.frequencies(), symmetry=plan.symmetry,
                       run_cache=out / f"{name}.runs.npz")
        write_s2p(out / f"{name}.s2p", res.sparams)
        row.update(point_metrics(res.sparams))
        row.update(status="ok", s2p=f"points/{name}.s2p", steps=res.steps,
                   converged=res.converged)
    except Exception as e:  # recorded in-row, the sweep carries on
        log.exception("point %d failed", idx)
        row.update(status="error", error=f"{type(e).__name__}: {e}", s2p="")
    row["provenance"] = {
        "variant": plan.variant, "preset": plan.preset, "symmetry": plan.symmetry,
        "overrides": overrides, "version": __version__,
    }
    tmp = out / f"{name}.json.tmp"
    tmp.write_text(json.dumps(row, sort_keys=True, indent=1))
    tmp.replace(out / f"{name}.json")
    return row


def _index_line(row):
    params = ";".join(f"{k}={_fmt(v)}" for k, v in row["params"].items())
    vals = [str(row["point"]), row["status"], params]
    for k in INDEX_COLUMNS[3:-1]:
        vals.append(_fmt(row[k]) if k in row else "")
    vals.append(row.get("s2p", ""))
    return "\t".join(vals) + "\n"


def estimate_cost_hours(plan: SweepPlan) -> float:
    total = 0.0
    runs_per_point = 1 if plan.symmetry == "mirror" else 2
    for p in plan.points():
        o = dict(plan.fixed)
        o.update(p)
        est = estimate_resources(build_variant(plan.variant, o), get_preset(plan.preset))
        total += est["cells"] * plan.steps_estimate * runs_per_point / plan.throughput
    return total / 3600


def run_sweep(plan: SweepPlan, out_dir, jobs: int | None = None, force: bool = False) -> SweepResult:
    """Run (or resume) every Cartesian point of ``plan`` under ``out_dir``."""
    out = Path(out_dir)
    (out / "points").mkdir(parents=True, exist_ok=True)
    if jobs is None:
        jobs = int(os.environ.get("PLANAR_EM_JOBS", "1"))
    jobs = max(1, int(jobs))

    points = list(plan.points())
    pending = [i for i in range(len(points)) if not (out / "points" / f"{_point_name(i)}.json").exists()]
    if pending and plan.budget_hours is not None and not force:
        hours = estimate_cost_hours(plan) * len(pending) / len(points)
        if hours > plan.budget_hours:
            raise BudgetError(f"sweep needs an estimated {hours:.1f} h, budget is "
                              f"{plan.budget_hours:g} h", hours)

    index = out / "index.tsv"
    if not index.exists():
        index.write_text("\t".join(INDEX_COLUMNS) + "\n")
    written = sum(1 for _ in index.open()) - 1

    plan_dict = {k: getattr(plan, k) for k in plan.__dataclass_fields__}
    rows = {}
    for i in range(len(points)):
        p = out / "points" / f"{_point_name(i)}.json"
        if p.exists():
            rows[i] = json.loads(p.read_text())

    def flush():
        nonlocal written
        with index.open("a") as fh:
            while written in rows:
                fh.write(_index_line(rows[written]))
                written += 1

    flush()
    tasks = [(i, points[i], plan_dict, str(out)) for i in pending]
    if jobs == 1 or len(tasks) <= 1:
        for t in tasks:
            rows[t[0]] = _run_point(t)
            flush()
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for row in pool.map(_run_point, tasks):
                rows[row["point"]] = row
                flush()

    ordered = [rows[i] for i in range(len(points))]
    _write_report(out / "report.csv", ordered, plan)
    prov = {"plan": plan.name, "variant": plan.variant, "preset": plan.preset,
            "grid": repr(get_preset(plan.preset).grid), "solver": repr(get_preset(plan.preset).sim),
            "version": __version__}
    return SweepResult(ordered, prov)


def _write_report(path, rows, plan):
    keys = ["point", "status"] + list(plan.axes) + ["f_low_ghz", "f_high_ghz", "n_matched", "matched_ghz",
                                                   "min_isolation_db", "max_ecc", "iso_2p5_db",
                                                   "iso_5p5_db", "error"]
    with open(path, "w", newline="") as fh:
        fh.write(f"# planar-em sweep {plan.name} variant={plan.variant} preset={plan.preset} "
                 f"version={__version__}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            vals = {**r, **r["params"]}
            w.writerow([_fmt(vals[k]) if k in vals else "" for k in keys])


# ---------------------------------------------------------------------------

@dataclass
class VariantComparison:
    names: tuple
    isolation: dict          # name -> {2.5e9: dB, 5.5e9: dB}
    deltas: dict             # "B-A" -> {freq: dB}
    matched_ghz: dict        # name -> total matched bandwidth (GHz)
    matched_deltas: dict

    def table(self) -> str:
        lines = ["variant      iso@2.5GHz  iso@5.5GHz  matched_GHz"]
        for n in self.names:
            iso = self.isolation[n]
            lines.append(f"{n:<12} {iso[2.5e9]:10.2f}  {iso[5.5e9]:10.2f}  {self.matched_ghz[n]:11.3f}")
        for k, d in self.deltas.items():
            lines.append(f"{k:<12} {d[2.5e9]:+10.2f}  {d[5.5e9]:+10.2f}  {self.matched_deltas[k]:+11.3f}")
        return "\n".join(lines)


def compare_variants(*results, names=("Ant I", "Ant II", "Ant III"), presets=None,
                     freqs=(2.5e9, 5.5e9)) -> VariantComparison:
    """Isolation and matched-band deltas between successive variants.

    ``results`` are SParamMatrix objects; ``presets`` (same length) names
    the grid preset of each and must agree.
    """
    if presets is not None and len(set(presets)) > 1:
        from .postproc.sparams import ContractError
        raise ContractError(f"variants simulated on different presets: {presets}")
    names = tuple(names[:len(results)])
    iso, matched = {}, {}
    for n, s in zip(names, results):
        iso[n] = {f: isolation_at(s, f) for f in freqs}
        rep = band_report(s, REPORT_BAND)
        matched[n] = sum(b - a for a, b in rep.matched) / 1e9
    deltas, mdeltas = {}, {}
    for a, b in zip(names, names[1:]):
        k = f"{b} - {a}"
        deltas[k] = {f: iso[b][f] - iso[a][f] for f in freqs}
        mdeltas[k] = matched[b] - matched[a]
    return VariantComparison(names, iso, deltas, matched, mdeltas)
