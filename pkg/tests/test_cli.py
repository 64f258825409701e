import os

import pytest

from app.services.runner import load_scenario
from cli import apply_overrides, build_parser, main

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "..", "scenarios")
LENS = os.path.join(SCENARIO_DIR, "lens_area_law.json")


def test_snapshot_writes_svg(tmp_path):
    out = tmp_path / "lens.svg"
    assert main(["snapshot", LENS, str(out)]) == 0
    assert out.read_text().startswith("<?xml")


def test_run_with_overrides(tmp_path, capsys):
    assert main(["run", LENS, "--out", str(tmp_path / "lens"), "--max-time", "0.002"]) == 0
    assert os.path.exists(tmp_path / "lens" / "summary.json")
    assert "max_time" in capsys.readouterr().out


def test_bad_scenario_file_exits_with_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "preset": \n}')
    assert main(["run", str(bad)]) == 1
    assert "line" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.json")]) == 1


def test_apply_overrides():
    scenario = load_scenario(LENS)
    args = build_parser().parse_args(["run", LENS, "--h", "0.01", "--eps-len", "0.05", "--max-transitions", "2"])
    changed = apply_overrides(scenario, args)
    assert changed.control.h_target == 0.01
    assert changed.thresholds.eps_len == 0.05
    assert changed.max_transitions == 2
    assert changed.stop == scenario.stop


def test_invalid_override_is_a_scenario_error(capsys):
    assert main(["run", LENS, "--cfl", "0.9"]) == 1
    assert "invalid override" in capsys.readouterr().err


def test_subcommand_is_required():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
