"""``planar-em`` command line: scene, run, sweep, report.

Exit codes: 0 success, 1 usage error, 2 simulation failure, 3 resource guard.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, parse_config
from .fdtd.solver import InstabilityError, PortError
from .geometry import GeometryError, Layout, dumps_layout, loads_layout
from .grid import ResourceGuardError, VoxelizationError
from .pipeline import OverrideError, build_variant, config_hash, parse_monitor, simulate
from .postproc.bands import band_report
from .postproc.ecc import ecc
from .postproc.ntff import FARFIELD_CSV_HEADER, pattern_csv_rows
from .postproc.currents import write_current_volume
from .postproc.sparams import db
from .postproc.touchstone import read_s2p, write_s2p
from .presets import PRESETS, get_preset

log = logging.getLogger("planar_em")

EXIT_OK, EXIT_USAGE, EXIT_SIM, EXIT_GUARD = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _provenance(chash="", extra=""):
    s = f"# planar-em {__version__}"
    if chash:
        s += f" config={chash}"
    if extra:
        s += f" {extra}"
    return s + "\n"


# ---------------------------------------------------------------------------

def _parse_sets(pairs):
    out = {}
    for p in pairs or ():
        k, sep, v = p.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {p!r}")
        out[k.strip()] = v.strip()
    return out


def _scene_from_config(text, variant=None, sets=None) -> Layout:
    cfg = parse_config(text)
    if "scene.version" in cfg:
        if variant or sets:
            raise UsageError("overrides cannot be applied to a serialized scene")
        return loads_layout(text)
    variant = variant or cfg.get("scene.variant")
    if variant is None:
        raise UsageError("no variant given (scene.variant or --variant)")
    overrides = dict(cfg.section("override"))
    overrides.update(sets or {})
    return build_variant(variant, overrides)


def load_scene(path, variant=None, sets=None) -> Layout:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"scene file not found: {p}")
    return _scene_from_config(p.read_text(), variant, sets)


def cmd_scene(args):
    sets = _parse_sets(args.set)
    if args.config:
        layout = load_scene(args.config, args.variant, sets)
    else:
        if not args.variant:
            raise UsageError("give a config file or --variant")
        layout = build_variant(args.variant, sets)
    text = dumps_layout(layout)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    b = layout.bounds
    print(f"bounds  {b.x0:g} {b.y0:g} {b.x1:g} {b.y1:g} mm")
    print(f"shapes  {len(layout.shapes)}")
    print(f"ports   {len(layout.ports)}")
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def _write_sparams_csv(path, s, chash):
    with open(path, "w", newline="") as fh:
        fh.write(_provenance(chash))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["freq_ghz", "s11_db", "s21_db", "s12_db", "s22_db"])
        for k, f in enumerate(s.freqs):
            w.writerow([f"{f / 1e9:.6f}"] + [f"{db(s.s[k, i, j]):.4f}" for i, j in ((0, 0), (1, 0), (0, 1), (1, 1))])


def _write_ecc_csv(path, s, chash):
    curve = ecc(s)
    with open(path, "w", newline="") as fh:
        fh.write(_provenance(chash))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["freq_ghz", "ecc"])
        for f, r in zip(curve.freqs, curve.rho_e):
            w.writerow([f"{f / 1e9:.6f}", f"{r:.8e}"])


def _write_band_csv(path, rep, chash):
    row = rep.as_row()
    with open(path, "w", newline="") as fh:
        fh.write(_provenance(chash))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(row))
        w.writerow([f"{v:.6f}" if isinstance(v, float) else v for v in row.values()])


def _write_pattern_csv(path, pattern, chash):
    with open(path, "w") as fh:
        fh.write(_provenance(chash))
        fh.write(FARFIELD_CSV_HEADER + "\n")
        for line in pattern_csv_rows(pattern):
            fh.write(line + "\n")


def write_run_outputs(out: Path, res, layout, preset_name):
    out.mkdir(parents=True, exist_ok=True)
    chash = res.config_hash
    s2p = out / "sparams.s2p"
    write_s2p(s2p, res.sparams)
    (out / "sparams.s2p.provenance").write_text(
        f"planar-em {__version__}\nconfig {chash}\npreset {preset_name}\n"
        f"grid {res.grid_shape} spacing_mm {res.spacing}\nsteps {res.steps}\nconverged {res.converged}\n")
    (out / "scene.txt").write_text(dumps_layout(layout))
    _write_sparams_csv(out / "sparams_db.csv", res.sparams, chash)
    _write_ecc_csv(out / "ecc.csv", res.sparams, chash)
    rep = band_report(res.sparams, (2.0e9, 6.5e9))
    _write_band_csv(out / "band_report.csv", rep, chash)
    (out / "summary.txt").write_text(_provenance(chash) + rep.summary() + "\n")
    for f, cmap in sorted(res.surface.items()):
        write_current_volume(out / f"surface_{f / 1e9:.3f}GHz.vtk", cmap, res.spacing)
    for f, pat in sorted(res.patterns.items()):
        _write_pattern_csv(out / f"farfield_{f / 1e9:.3f}GHz.csv", pat, chash)
    return rep


def cmd_run(args):
    layout = load_scene(args.scene)
    preset = get_preset(args.preset)
    monitors = [parse_monitor(m) for m in args.monitor or ()]
    out = Path(args.out)
    res = simulate(layout, preset, monitors=monitors, symmetry=args.symmetry, force=args.force,
                   run_cache=out / "runs.npz" if args.cache else None)
    rep = write_run_outputs(out, res, layout, preset.name)
    print(rep.summary())
    if not all(res.converged):
        print("warning: energy threshold not reached before max_steps", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args):
    from .sweep import BudgetError, load_plan, run_sweep

    if not Path(args.plan).exists():
        raise UsageError(f"plan file not found: {args.plan}")
    plan = load_plan(args.plan)
    try:
        res = run_sweep(plan, args.out, jobs=args.jobs, force=args.force)
    except BudgetError as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_GUARD
    bad = [r for r in res.rows if r["status"] != "ok"]
    print(f"{len(res.rows)} points, {len(bad)} failed; index at {Path(args.out) / 'index.tsv'}")
    return EXIT_SIM if bad and len(bad) == len(res.rows) else EXIT_OK


def _cut_rows(csv_path, phi):
    rows = []
    with open(csv_path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for rec in csv.DictReader(lines):
        if abs(float(rec["phi_deg"]) - phi) < 1e-6:
            rows.append(rec)
    return rows


def cmd_report(args):
    from .sweep import compare_variants

    dirs = [Path(d) for d in args.results]
    for d in dirs:
        if not d.is_dir():
            raise UsageError(f"results directory not found: {d}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mats, names = [], []
    for d in dirs:
        s2p = d / "sparams.s2p"
        if (d / "index.tsv").exists():
            with open(d / "index.tsv") as fh:
                text = fh.read()
            (out / f"{d.name}_index.tsv").write_text(text)
            print(f"{d.name}: sweep with {text.count(chr(10)) - 1} rows")
            continue
        if not s2p.exists():
            raise UsageError(f"missing input file: {s2p}")
        s = read_s2p(s2p)
        mats.append(s)
        names.append(d.name)
        _write_sparams_csv(out / f"{d.name}_sparams_db.csv", s, "")
        _write_ecc_csv(out / f"{d.name}_ecc.csv", s, "")
        for ff in sorted(d.glob("farfield_*GHz.csv")):
            for phi in (0.0, 90.0):
                with open(out / f"{d.name}_{ff.stem}_cut_phi{int(phi)}.csv", "w") as fh:
                    fh.write(_provenance())
                    fh.write(FARFIELD_CSV_HEADER + "\n")
                    for r in _cut_rows(ff, phi):
                        fh.write(",".join(r[k] for k in FARFIELD_CSV_HEADER.split(",")) + "\n")
        print(f"{d.name}:")
        print(band_report(s, (2.0e9, 6.5e9)).summary())
    if not mats and not any((d / "index.tsv").exists() for d in dirs):
        raise UsageError("no results found")
    if len(mats) >= 2:
        cmp_ = compare_variants(*mats, names=tuple(names))
        table = cmp_.table()
        (out / "comparison.txt").write_text(_provenance() + table + "\n")
        print(table)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="planar-em", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"planar-em {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("scene", help="write a serialized layout")
    s.add_argument("config", nargs="?", help="scene config (scene.variant, override.*) or scene file")
    s.add_argument("--variant", help="single, mimo, mimo_ebg1 or mimo_ebg3")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="geometry override, e.g. ebg.a=5")
    s.add_argument("--out", help="output scene file (stdout if omitted)")
    s.set_defaults(func=cmd_scene)

    r = sub.add_parser("run", help="simulate a scene and write S-parameters and reports")
    r.add_argument("scene")
    r.add_argument("--preset", default="coarse", choices=sorted(PRESETS))
    r.add_argument("--out", required=True)
    r.add_argument("--monitor", action="append", metavar="KIND:FREQ",
                   help="surface:2.5GHz or farfield:2.5GHz,5.5GHz (repeatable)")
    r.add_argument("--symmetry", default="full", choices=("full", "mirror"))
    r.add_argument("--cache", action="store_true", help="reuse/keep raw port records in OUT/runs.npz")
    r.add_argument("--force", action="store_true")
    r.set_defaults(func=cmd_run)

    w = sub.add_parser("sweep", help="run a parametric sweep plan")
    w.add_argument("plan")
    w.add_argument("--out", required=True)
    w.add_argument("--jobs", type=int, default=None, help="parallel points (default $PLANAR_EM_JOBS or 1)")
    w.add_argument("--force", action="store_true")
    w.set_defaults(func=cmd_sweep)

    t = sub.add_parser("report", help="summaries and plot-ready CSVs from results")
    t.add_argument("results", nargs="+")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, OverrideError, ConfigError, GeometryError, ValueError) as e:
        if isinstance(e, (InstabilityError, VoxelizationError, PortError)):
            print(f"simulation failed: {e}", file=sys.stderr)
            return EXIT_SIM
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceGuardError as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_GUARD
    except (InstabilityError, FloatingPointError) as e:
        print(f"simulation failed: {e}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
