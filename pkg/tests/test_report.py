import json
import math
import os

import polars as pl
import pytest

from diagnostics.quantities import measure
from flow.engine import FlowState
from network.model import Network
from report.report_modules import RunSummary, clean_json, event_model, fit_model
from report.reporter import ReportGenerator, file_digest, fmt
from singularity.detect import Thresholds, detect
from singularity.rates import BlowupFit
from utils.errors import InvalidArgument


@pytest.fixture
def reporter():
    return ReportGenerator()


def test_fmt_uses_nine_significant_digits():
    assert fmt(1.0 / 3.0) == "0.333333333"
    assert fmt(-0.0) == "0"


def test_lens_svg(reporter, lens_net):
    svg = reporter.render_svg(lens_net, title="lens")
    assert svg == reporter.render_svg(lens_net, title="lens")
    assert svg.count("<path") == 4
    assert svg.count("<circle") == 2
    assert svg.count("<rect") == 2
    assert "<polygon" in svg
    assert "<title>lens</title>" in svg


def test_empty_network_snapshot_leaves_no_file(reporter, tmp_path):
    path = tmp_path / "empty.svg"
    with pytest.raises(InvalidArgument):
        reporter.emit_snapshot(Network(curves=()), str(path))
    assert not path.exists()
    assert os.listdir(tmp_path) == []


def test_samples_csv(reporter, lens_net, tmp_path):
    samples = [measure(lens_net, 0.0, theta=[1.2]), measure(lens_net, 0.01, theta=[float("nan")])]
    frame = reporter.samples_frame(samples)
    assert frame.columns == ["t", "L", "L_1", "L_2", "L_3", "L_4", "A_1", "int_k2", "max_abs_k", "E", "Pi", "Theta_1"]
    assert frame["E"].null_count() == 2
    assert frame["Theta_1"].to_list() == ["1.2", None]

    path = reporter.write_samples(samples, str(tmp_path / "samples.csv"))
    back = pl.read_csv(path)
    assert back.height == 2
    assert back["t"].to_list()[1] == pytest.approx(0.01)
    assert file_digest(path) == file_digest(reporter.write_samples(samples, str(tmp_path / "again.csv")))


def test_events_jsonl(reporter, lens_net, tmp_path):
    event = detect(FlowState(network=lens_net, t=0.2), Thresholds(eps_area=1.0, k_region=0.5).resolve(0.02))
    record = {"type": "event", **event_model(event, distance=float("nan")).model_dump()}
    path = reporter.write_events([record, {"type": "note", "b": 1, "a": math.inf}], str(tmp_path / "events.jsonl"))
    lines = open(path).read().splitlines()
    assert len(lines) == 2
    first = json.loads(lines[0])
    assert first["kind"] == "RegionCollapse"
    assert first["blowup_distance"] is None
    assert list(first) == sorted(first)
    assert json.loads(lines[1]) == {"a": None, "b": 1, "type": "note"}


def test_summary_and_html(reporter, tmp_path):
    fit = BlowupFit(slope=-1.0, C=2.0, C_linear=1.0, samples=12, accepted=True)
    summary = RunSummary(scenario="demo", exit_code=0, reason="max_time", final_topology=None, t_final=0.5,
                         steps=10, blowup_fits=[fit_model(fit)], message=None)
    text = reporter.to_json(summary)
    data = json.loads(text)
    assert data["blowup_fits"][0]["slope"] == -1.0
    assert list(data) == sorted(data)
    html_path = reporter.render_html(summary, str(tmp_path / "report.html"), snapshots=["snapshot_0000.svg"])
    html = open(html_path).read()
    assert "<h1>demo</h1>" in html
    assert "snapshot_0000.svg" in html


def test_clean_json():
    assert clean_json({"a": [1.0, float("nan")], "b": (float("-inf"), "x")}) == {"a": [1.0, None], "b": [None, "x"]}
