import numpy as np
import pytest

from planar_em.cli import main
from planar_em.postproc import SParamMatrix, write_s2p


def test_scene_variant_summary(capsys):
    assert main(["scene", "--variant", "mimo"]) == 0
    out = capsys.readouterr().out
    assert "ports   2" in out and "scene.version" in out


def test_scene_round_trip_byte_identical(tmp_path):
    a, b = tmp_path / "a.scene", tmp_path / "b.scene"
    assert main(["scene", "--variant", "mimo_ebg3", "--set", "ebg.a=5", "--out", str(a)]) == 0
    assert main(["scene", str(a), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_scene_config_file(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("scene.variant = mimo_ebg1\noverride.ebg.a = 5\n")
    assert main(["scene", str(cfg), "--out", str(tmp_path / "x.scene")]) == 0
    assert "ebg" in (tmp_path / "x.scene").read_text()


@pytest.mark.parametrize("argv", [
    ["scene", "--variant", "nope"],
    ["scene", "--variant", "mimo", "--set", "sir.bogus=1"],
    ["scene", "--variant", "mimo", "--set", "novalue"],
    ["scene", "missing.cfg"],
    ["run", "missing.scene", "--out", "x"],
    ["frobnicate"],
])
def test_usage_errors_exit_1(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as e:
        code = e.code
    assert code == 1
    assert capsys.readouterr().err


def test_run_refused_by_resource_guard(tmp_path, capsys):
    cfg = tmp_path / "big.cfg"
    cfg.write_text("scene.variant = mimo\noverride.mimo.element_spacing = 3000\n")
    code = main(["run", str(cfg), "--preset", "fine", "--out", str(tmp_path / "o")])
    assert code == 3
    assert "refused" in capsys.readouterr().err


def test_sweep_budget_refusal(tmp_path):
    plan = tmp_path / "p.plan"
    plan.write_text("sweep.variant = mimo_ebg3\nsweep.preset = fine\nsweep.budget_hours = 0.001\n"
                    "axis.ebg.a = 3, 4\n")
    assert main(["sweep", str(plan), "--out", str(tmp_path / "o")]) == 3


def test_report_empty_directory(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["report", str(tmp_path / "empty"), "--out", str(tmp_path / "r")]) == 1


def _result_dir(path, coupling):
    path.mkdir()
    f = np.arange(2e9, 7e9 + 1, 25e6)
    s = np.zeros((f.size, 2, 2), complex)
    s[:, 0, 0] = s[:, 1, 1] = 0.2
    s[:, 0, 1] = s[:, 1, 0] = coupling
    write_s2p(path / "sparams.s2p", SParamMatrix(f, s))


def test_report_comparison(tmp_path):
    _result_dir(tmp_path / "ant1", 0.1)
    _result_dir(tmp_path / "ant3", 0.01)
    out = tmp_path / "r"
    assert main(["report", str(tmp_path / "ant1"), str(tmp_path / "ant3"), "--out", str(out)]) == 0
    text = (out / "comparison.txt").read_text()
    assert text.startswith("# planar-em") and "+20.00" in text
    lines = (out / "ant1_sparams_db.csv").read_text().splitlines()
    assert lines[0].startswith("# planar-em") and len(lines) == 2 + 201
