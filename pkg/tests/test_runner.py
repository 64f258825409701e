import glob
import json
import math
import os

import pytest

from app.services.runner import (EXIT_OK, Scenario, atlas_summary, check_scenario, load_scenario, parse_scenario, run,
                                 scenario_from_dict)
from network.topology import validate_regular
from singularity.detect import EventKind
from utils.errors import ScenarioError

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "..", "scenarios")

SHORT_LENS = {
    "name": "short_lens",
    "preset": {"name": "lens", "params": {"area": 0.3, "h": 0.02}},
    "control": {"h_target": 0.02},
    "stop": {"max_time": 0.002, "sample_every": 0.0005},
    "embeddedness_stride": 8,
}

TINY_CIRCLE = {
    "name": "tiny_circle",
    "preset": {"name": "circle", "params": {"radius": 0.2, "n": 64}},
    "control": {"h_target": 0.02, "nodes_per_curve": 64},
    "stop": {"max_time": 0.05, "sample_every": 0.002},
    "embeddedness_stride": 0,
}


def test_bad_json_reports_line():
    with pytest.raises(ScenarioError) as info:
        parse_scenario('{\n  "name": ,\n}')
    assert info.value.line == 2


@pytest.mark.parametrize("data, field", [
    ({"name": "none"}, None),
    ({"preset": {"name": "circle"}, "network": {"curves": []}}, None),
    ({"preset": {"name": "heptagon"}}, "preset"),
    ({"preset": {"name": "lens", "params": {"half_width": 0.5, "domain_radius": 0.4}}}, "preset"),
    ({"preset": {"name": "circle", "params": {"bogus": 1}}}, "preset.params"),
    ({"preset": {"name": "circle"}, "control": {"cfl": 0.9}}, "control.cfl"),
    ({"preset": {"name": "circle"}, "schema_version": 2}, None),
])
def test_invalid_scenarios(data, field):
    with pytest.raises(ScenarioError) as info:
        scenario_from_dict(data)
    if field is not None:
        assert info.value.field == field


def test_missing_file(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(str(tmp_path / "nope.json"))


@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(SCENARIO_DIR, "*.json"))))
def test_shipped_scenarios_load(path):
    scenario = load_scenario(path)
    assert isinstance(scenario, Scenario)
    assert scenario.build_network().curves


def test_insertion_length_defaults_to_eight_h():
    scenario = scenario_from_dict(SHORT_LENS)
    assert scenario.insertion_length == pytest.approx(0.16)
    assert scenario_from_dict({**SHORT_LENS, "delta": 0.05}).insertion_length == 0.05


def test_short_run_writes_artifacts(tmp_path):
    out = run(scenario_from_dict(SHORT_LENS), str(tmp_path / "lens"))
    assert out.exit_code == EXIT_OK
    assert out.summary.reason == "max_time"
    assert out.summary.t_final == pytest.approx(0.002)
    assert out.summary.final_topology == "Lens"
    for name in out.summary.artifacts.values():
        assert os.path.exists(os.path.join(out.out_dir, name))
    assert out.snapshots[0].endswith("initial.svg")
    assert out.snapshots[-1].endswith("final.svg")
    summary = json.load(open(os.path.join(out.out_dir, "summary.json")))
    assert summary["samples_digest"] == out.summary.samples_digest
    assert [s.t for s in out.samples] == sorted(s.t for s in out.samples)
    assert out.samples[0].E <= 4.0 * 3 ** 0.5


def test_check_scenario_on_short_lens():
    checks = check_scenario(scenario_from_dict({**SHORT_LENS, "stop": {"max_time": 0.004, "sample_every": 0.0005}}))
    assert checks["herring_deg"]["passed"]
    assert checks["embeddedness_start"]["passed"]
    assert checks["embeddedness_end"]["passed"]
    assert "length_dissipation" in checks


@pytest.mark.slow
def test_tiny_circle_goes_extinct_deterministically(tmp_path):
    scenario = scenario_from_dict(TINY_CIRCLE)
    first = run(scenario, str(tmp_path / "a"))
    second = run(scenario, str(tmp_path / "b"))
    assert first.exit_code == EXIT_OK
    assert first.summary.reason == "extinction"
    assert first.summary.events[0].kind == EventKind.REGION_COLLAPSE.value
    assert first.summary.events[0].T_estimate == pytest.approx(0.02, rel=2e-2)
    assert first.summary.samples_digest == second.summary.samples_digest
    assert first.summary.events_digest == second.summary.events_digest


@pytest.mark.slow
def test_symmetric_theta_restarts_as_eyeglasses(tmp_path):
    out = run(load_scenario(os.path.join(SCENARIO_DIR, "theta_symmetric.json")), str(tmp_path / "theta"))
    first = out.summary.events[0]
    cell_extinction = 3.0 / (4.0 * math.pi)
    assert first.kind == EventKind.INTERNAL_CURVE_COLLAPSE.value
    assert 0.4 * cell_extinction <= first.t < cell_extinction
    assert not first.anomalous
    restart = out.summary.transitions[0]
    assert (restart.kind, restart.pre, restart.post) == ("standard", "Theta", "EyeglassesA")
    assert restart.t == pytest.approx(first.t)


@pytest.mark.slow
def test_collapsing_tree_restarts_as_tree(tmp_path):
    out = run(load_scenario(os.path.join(SCENARIO_DIR, "collapsing_tree.json")), str(tmp_path / "tree"))
    assert out.exit_code == EXIT_OK
    assert out.summary.events[0].kind == EventKind.INTERNAL_CURVE_COLLAPSE.value
    restart = out.summary.transitions[0]
    assert (restart.kind, restart.pre, restart.post) == ("standard", "Tree", "Tree")
    assert restart.delta == pytest.approx(0.16)
    assert out.summary.final_topology == "Tree"
    assert validate_regular(out.network).passed
    after = [s for s in out.samples if s.t > restart.t]
    assert after and min(after[-1].L_i) > min(after[0].L_i)


@pytest.mark.slow
def test_lens_region_collapse_blowup_and_continuation(tmp_path):
    out = run(load_scenario(os.path.join(SCENARIO_DIR, "lens_region_collapse.json")), str(tmp_path / "lens"))
    first = out.summary.events[0]
    assert first.kind == EventKind.REGION_COLLAPSE.value
    assert first.T_estimate == pytest.approx(0.5 / (4.0 * math.pi / 3.0), rel=2e-2)
    assert first.blowup_class == "StandardLens"
    fit = out.summary.blowup_fits[0]
    assert fit.accepted
    assert fit.slope <= -0.45
    assert fit.C > 0.0
    restart = out.summary.transitions[0]
    assert (restart.kind, restart.pre) == ("continuation", "Lens")


@pytest.mark.slow
def test_atlas_summary_export(tmp_path):
    rows = atlas_summary(str(tmp_path))
    assert len(rows) == 9
    assert [r["name"] for r in rows] == sorted(r["name"] for r in rows)
    assert os.path.exists(tmp_path / "Fish.json")
    assert os.path.exists(tmp_path / "Fish.svg")
