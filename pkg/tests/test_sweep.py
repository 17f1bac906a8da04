import numpy as np
import pytest

import planar_em.sweep as sweep_mod
from planar_em.config import ConfigError
from planar_em.geometry import dumps_layout
from planar_em.pipeline import SimulationResult
from planar_em.postproc import SParamMatrix, read_s2p
from planar_em.sweep import BudgetError, SweepPlan, compare_variants, parse_plan, run_sweep

PLAN = """\
# EBG cell width study
sweep.variant = mimo_ebg3
sweep.preset = coarse
sweep.budget_hours = none
sweep.name = ebg-a
axis.ebg.a = 3, 4, 5
fixed.ebg.b = 2
"""


def _synthetic(layout):
    """Deterministic two-port with dips that move with the layout."""
    f = np.arange(2e9, 7e9 + 1, 25e6)
    shift = (len(dumps_layout(layout)) % 97) * 1e6
    s11 = 0.9 - 0.8 * np.exp(-((f - 2.6e9 - shift) / 0.15e9) ** 2) - 0.8 * np.exp(-((f - 5.5e9 + shift) / 0.4e9) ** 2)
    s = np.zeros((f.size, 2, 2), complex)
    s[:, 0, 0] = s[:, 1, 1] = s11
    s[:, 0, 1] = s[:, 1, 0] = 0.1 * np.exp(-1j * f / 1e9)
    return SParamMatrix(f, s)


@pytest.fixture
def fake_sim(monkeypatch):
    calls = []

    def fake(layout, preset, freqs=None, monitors=(), symmetry="full", force=False, run_cache=None):
        calls.append(layout)
        return SimulationResult(_synthetic(layout), [], steps=[1, 1], converged=[True, True])

    monkeypatch.setattr(sweep_mod, "simulate", fake)
    return calls


def test_parse_plan():
    p = parse_plan(PLAN)
    assert p.variant == "mimo_ebg3" and p.budget_hours is None
    assert p.axes == {"ebg.a": [3, 4, 5]}
    assert p.fixed == {"ebg.b": "2"}
    assert [pt["ebg.a"] for pt in p.points()] == [3, 4, 5]


def test_plan_rejects_unknown_parameter():
    with pytest.raises(ConfigError):
        parse_plan(PLAN.replace("axis.ebg.a", "axis.ebg.zz"))
    with pytest.raises(ConfigError):
        SweepPlan("mimo", {"sir.l1": []})


def test_single_point_matches_direct(tmp_path, fake_sim):
    plan = SweepPlan("mimo", {"sir.l1": [17.5]}, budget_hours=None)
    res = run_sweep(plan, tmp_path)
    assert res.rows[0]["status"] == "ok"
    direct = _synthetic(fake_sim[0])
    got = read_s2p(tmp_path / "points" / "p0000.s2p")
    assert np.array_equal(got.s, direct.s)


def test_resume_reproduces_index(tmp_path, fake_sim, monkeypatch):
    plan = parse_plan(PLAN)
    run_sweep(plan, tmp_path / "full")
    full = (tmp_path / "full" / "index.tsv").read_bytes()

    real = sweep_mod.simulate
    count = {"n": 0}

    def interrupted(*a, **k):
        count["n"] += 1
        if count["n"] == 3:
            raise KeyboardInterrupt
        return real(*a, **k)

    monkeypatch.setattr(sweep_mod, "simulate", interrupted)
    with pytest.raises(KeyboardInterrupt):
        run_sweep(plan, tmp_path / "part")
    assert len((tmp_path / "part" / "index.tsv").read_text().splitlines()) == 3
    monkeypatch.setattr(sweep_mod, "simulate", real)
    n_before = len(fake_sim)
    run_sweep(plan, tmp_path / "part")
    assert len(fake_sim) - n_before == 1          # only the missing point reran
    assert (tmp_path / "part" / "index.tsv").read_bytes() == full
    assert (tmp_path / "part" / "report.csv").read_bytes() == (tmp_path / "full" / "report.csv").read_bytes()


def test_failed_point_recorded(tmp_path, fake_sim):
    # a negative cell size is rejected by geometry; the sweep carries on
    plan = SweepPlan("mimo_ebg3", {"ebg.a": [4, -1]}, budget_hours=None)
    res = run_sweep(plan, tmp_path)
    assert [r["status"] for r in res.rows] == ["ok", "error"]
    assert "error" in res.rows[1]
    lines = (tmp_path / "index.tsv").read_text().splitlines()
    assert lines[2].split("\t")[1] == "error"


def test_budget_refusal(tmp_path, fake_sim):
    plan = SweepPlan("mimo_ebg3", {"ebg.a": [3, 4, 5]}, budget_hours=0.01, preset="default")
    with pytest.raises(BudgetError) as e:
        run_sweep(plan, tmp_path)
    assert e.value.estimate_hours > 0.01
    assert not fake_sim


def test_compare_variants_deltas():
    a, b = _synthetic_pair(0.1), _synthetic_pair(0.05)
    cmp = compare_variants(a, b, names=("Ant I", "Ant II"))
    d = cmp.deltas["Ant II - Ant I"]
    assert d[2.5e9] == pytest.approx(20 * np.log10(2), abs=1e-9)
    assert "Ant II" in cmp.table()


def test_compare_variants_rejects_mixed_presets():
    from planar_em.postproc import ContractError
    with pytest.raises(ContractError):
        compare_variants(_synthetic_pair(0.1), _synthetic_pair(0.1), presets=("coarse", "default"))


def _synthetic_pair(coupling):
    f = np.arange(2e9, 7e9 + 1, 25e6)
    s = np.zeros((f.size, 2, 2), complex)
    s[:, 0, 0] = s[:, 1, 1] = 0.5
    s[:, 0, 1] = s[:, 1, 0] = coupling
    return SParamMatrix(f, s)
