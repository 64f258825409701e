# app/services/runner.py
"""
Scenario loading and run orchestration: flow, diagnostics, events,
transitions and restarts, with every artifact written under one directory.
"""
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from atlas.classify import classify_blowup
from atlas.shrinkers import catalog
from diagnostics.density import rescale
from diagnostics.embeddedness import FOUR_SQRT3, embeddedness_measure
from diagnostics.quantities import DiagnosticsSample, area_law_residual, length_dissipation_residual, loop_series
from flow.engine import FlowState, StepControl, initial_state
from flow.trajectory import StopCriteria, run_until, sample
from network.junctions import project_junctions
from network.model import Network
from network.presets import build_preset
from network.serialize import dumps_network, network_from_dict, network_to_dict
from network.topology import DEFAULT_ANGLE_TOL, extract_loops, tag_or_none, validate_regular
from report.report_modules import RunSummary, boundary_model, event_model, fit_model, transition_model
from report.reporter import ReportGenerator, file_digest
from singularity.detect import EventKind, SingularEvent, Thresholds, degenerate_core
from singularity.rates import blowup_rate_check
from singularity.transition import boundary_transition, region_collapse_continuation, standard_transition
from utils.errors import (ContinuationUnsupported, EmptyBlowup, InvalidArgument, NetworkFlowError,
                          ScenarioError, TransitionRefused)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNSUPPORTED = 2
EXIT_SIMULTANEOUS = 3
EXIT_TRANSITION_CAP = 4
EXIT_CHECK_FAILED = 5


# ------------------- Scenario -------------------
class PresetSpec(BaseModel):
    name: str
    params: Dict[str, Any] = Field(default_factory=dict)


class ProbeSpec(BaseModel):
    x0: Tuple[float, float]
    t0: float


class Scenario(BaseModel):
    schema_version: int = SCHEMA_VERSION
    name: str = "scenario"
    preset: Optional[PresetSpec] = None
    network: Optional[Dict[str, Any]] = None
    control: StepControl = Field(default_factory=StepControl)
    thresholds: Thresholds = Field(default_factory=Thresholds)
    stop: StopCriteria = Field(default_factory=StopCriteria)
    probes: List[ProbeSpec] = Field(default_factory=list)
    embeddedness_stride: int = Field(4, ge=0)
    max_transitions: int = Field(4, ge=0)
    delta: Optional[float] = Field(None, gt=0.0)  # inserted curve length, 8 h_target when unset
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _one_source(self) -> "Scenario":
        if (self.preset is None) == (self.network is None):
            raise ValueError("give exactly one of 'preset' and 'network'")
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"schema_version {self.schema_version} is not supported")
        return self

    @property
    def insertion_length(self) -> float:
        return self.delta if self.delta is not None else 8.0 * self.control.h_target

    def build_network(self) -> Network:
        """Network of the scenario, junctions Newton-placed and checked against Herring within 0.5 degrees."""
        try:
            if self.preset is not None:
                params = dict(self.preset.params)
                if self.seed is not None and params.get("jitter_deg"):
                    params.setdefault("seed", self.seed)
                net = build_preset(self.preset.name, **params)
                field_name = "preset"
            else:
                net = network_from_dict(self.network)
                field_name = "network"
        except TypeError as e:
            raise ScenarioError(f"bad preset parameters: {e}", field="preset.params") from e
        except InvalidArgument as e:
            raise ScenarioError(str(e), field="preset" if self.preset is not None else "network") from e
        if net.junctions:
            net = project_junctions(net)
        report = validate_regular(net, DEFAULT_ANGLE_TOL)
        if not report.passed:
            raise ScenarioError(f"junction angles deviate by {report.max_deviation_deg:.3f} degrees", field=field_name)
        return net


def parse_scenario(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"scenario does not parse: {e.msg}", line=e.lineno) from e
    return scenario_from_dict(data)


def scenario_from_dict(data: Any) -> Scenario:
    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        loc = ".".join(str(p) for p in err["loc"])
        raise ScenarioError(f"invalid scenario field '{loc}': {err['msg']}", field=loc) from e
    scenario.build_network()
    return scenario


def load_scenario(path: str) -> Scenario:
    if not os.path.exists(path):
        raise ScenarioError(f"scenario file {path} does not exist")
    with open(path, "r", encoding="utf-8") as f:
        return parse_scenario(f.read())


# ------------------- Run -------------------
@dataclass
class RunOutput:
    summary: RunSummary
    samples: List[DiagnosticsSample]
    records: List[Dict[str, Any]]
    out_dir: str
    network: Network
    exit_code: int
    snapshots: List[str] = field(default_factory=list)


def _classify(state: FlowState, event: SingularEvent):
    frame = rescale(state.network, event.location, state.t, event.T_estimate)
    try:
        return classify_blowup(frame, profiles=catalog().values())
    except EmptyBlowup as exc:
        logger.warning("no blow-up class at t=%.9g: %s", state.t, exc)
        return None


def _is_extinction(network: Network, event: SingularEvent) -> bool:
    return event.kind is EventKind.REGION_COLLAPSE and len(network.curves) == 1 and network.curves[0].closed


class _Snapshots:
    def __init__(self, reporter: ReportGenerator, out_dir: str):
        self.reporter = reporter
        self.dir = os.path.join(out_dir, "snapshots")
        self.files: List[str] = []

    def take(self, network: Network, label: str) -> str:
        name = f"{len(self.files):03d}_{label}.svg"
        self.reporter.emit_snapshot(network, os.path.join(self.dir, name), title=label)
        self.files.append(os.path.join("snapshots", name))
        return name


def run(scenario: Scenario, out_dir: str) -> RunOutput:
    """
    Flow the scenario network, restart after standard transitions and region
    continuations up to max_transitions times, and write samples.csv,
    events.jsonl, summary.json, report.html, final_network.json and SVG
    snapshots to out_dir.
    """
    reporter = ReportGenerator()
    os.makedirs(out_dir, exist_ok=True)
    shots = _Snapshots(reporter, out_dir)
    control = scenario.control
    h = control.h_target
    probes = [(p.x0, p.t0) for p in scenario.probes]

    samples: List[DiagnosticsSample] = []
    records: List[Dict[str, Any]] = []
    summary = RunSummary(scenario=scenario.name, exit_code=EXIT_OK, reason="max_time", final_topology=None,
                         t_final=0.0, steps=0)
    net = scenario.build_network()
    state = initial_state(net)
    shots.take(net, "initial")
    t_stop = state.t + scenario.stop.max_time
    logger.info("run %s: %s network, %d curves, until t=%.6g", scenario.name,
                getattr(net.topology, "value", "untagged"), len(net.curves), t_stop)

    try:
        while True:
            remaining_steps = scenario.stop.max_steps - summary.steps
            if state.t >= t_stop - 1e-15:
                summary.reason = "max_time"
                break
            if remaining_steps <= 0:
                summary.reason = "max_steps"
                break
            stop = scenario.stop.model_copy(update={"max_time": t_stop - state.t, "max_steps": remaining_steps})
            traj = run_until(state, control, stop, scenario.thresholds, probes, scenario.embeddedness_stride)
            fresh = [s for s in traj.samples if not samples or s.t > samples[-1].t]
            samples.extend(fresh)
            state = traj.final
            summary.steps += traj.steps
            if traj.reason != "event":
                summary.reason = traj.reason
                break

            event = traj.event
            match = None
            if event.kind is EventKind.REGION_COLLAPSE:
                match = _classify(state, event)
                event.blowup_class = match.name if match else None
                try:
                    summary.blowup_fits.append(fit_model(blowup_rate_check(traj.samples, event.T_estimate)))
                except InvalidArgument as exc:
                    logger.info("no blow-up fit: %s", exc)
            ev = event_model(event, match.distance if match else None)
            summary.events.append(ev)
            records.append({"record": "event", **ev.model_dump(mode="json")})

            if event.halts:
                summary.exit_code, summary.reason = EXIT_SIMULTANEOUS, "simultaneous_collapse"
                records.append({"record": "halt", "t": event.t, "reason": summary.reason})
                break
            if _is_extinction(state.network, event):
                summary.reason = "extinction"
                break
            if event.kind is EventKind.CURVATURE_BLOWUP:
                summary.exit_code, summary.reason = EXIT_UNSUPPORTED, "curvature_blowup"
                records.append({"record": "halt", "t": event.t, "reason": summary.reason})
                break
            if event.kind is EventKind.BOUNDARY_CURVE_COLLAPSE:
                limit = boundary_transition(state.network, event.curves[0], t=event.t)
                summary.boundary_limits.append(boundary_model(limit))
                records.append({"record": "boundary_limit", **boundary_model(limit).model_dump(mode="json")})
                if limit.network is not None:
                    shots.take(limit.network, "boundary_limit")
                summary.exit_code, summary.reason = EXIT_UNSUPPORTED, "boundary_collapse"
                break
            if len(summary.transitions) >= scenario.max_transitions:
                summary.exit_code, summary.reason = EXIT_TRANSITION_CAP, "transition_cap"
                records.append({"record": "halt", "t": event.t, "reason": summary.reason})
                break

            shots.take(state.network, f"pre_{len(summary.transitions) + 1}")
            core = degenerate_core(state.network, event)
            try:
                if event.kind is EventKind.INTERNAL_CURVE_COLLAPSE:
                    new_net, record = standard_transition(state.network, event.curves[0], scenario.insertion_length, h,
                                                          t=event.t, core=core)
                else:
                    new_net, record = region_collapse_continuation(state.network, event, event.blowup_class, h, core=core)
            except (TransitionRefused, ContinuationUnsupported) as exc:
                logger.warning("no restart at t=%.9g: %s", event.t, exc)
                summary.exit_code, summary.reason, summary.message = EXIT_UNSUPPORTED, "unsupported", str(exc)
                records.append({"record": "halt", "t": event.t, "reason": "unsupported", "message": str(exc)})
                break
            tm = transition_model(record)
            summary.transitions.append(tm)
            records.append({"record": "transition" if record.kind == "standard" else "continuation",
                            **tm.model_dump(mode="json")})
            shots.take(new_net, f"post_{len(summary.transitions)}")
            state = initial_state(new_net, t0=event.t)
    except NetworkFlowError as exc:
        logger.error("run %s failed at t=%.9g: %s", scenario.name, state.t, exc)
        summary.exit_code, summary.reason, summary.message = EXIT_ERROR, "error", f"{type(exc).__name__}: {exc}"
        records.append({"record": "halt", "t": state.t, "reason": "error", "message": summary.message})

    if not samples:
        samples.append(sample(state))
    shots.take(state.network, "final")
    summary.t_final = state.t
    summary.final_topology = getattr(state.network.topology or tag_or_none(state.network), "value", None)

    samples_path = reporter.write_samples(samples, os.path.join(out_dir, "samples.csv"))
    events_path = reporter.write_events(records, os.path.join(out_dir, "events.jsonl"))
    with open(os.path.join(out_dir, "final_network.json"), "w", encoding="utf-8") as f:
        f.write(dumps_network(state.network))
    summary.samples_digest = file_digest(samples_path)
    summary.events_digest = file_digest(events_path)
    summary.artifacts = {"samples": "samples.csv", "events": "events.jsonl", "summary": "summary.json",
                         "report": "report.html", "final_network": "final_network.json"}
    reporter.write_summary(summary, os.path.join(out_dir, "summary.json"))
    reporter.render_html(summary, os.path.join(out_dir, "report.html"), shots.files)
    logger.info("run %s finished: %s (exit %d) at t=%.9g after %d steps", scenario.name, summary.reason,
                summary.exit_code, summary.t_final, summary.steps)
    return RunOutput(summary=summary, samples=samples, records=records, out_dir=out_dir, network=state.network,
                     exit_code=summary.exit_code, snapshots=shots.files)


# ------------------- Check -------------------
def check_scenario(scenario: Scenario) -> Dict[str, Dict[str, Any]]:
    """
    Invariant suite on the flow up to the first event: Herring at every
    sample, length dissipation between consecutive samples, the loop area
    laws over the first half of the run, and E <= 4 sqrt 3 at both ends.
    """
    state = initial_state(scenario.build_network())
    worst_angle = [0.0]

    def on_sample(s: FlowState, _d: DiagnosticsSample) -> None:
        worst_angle[0] = max(worst_angle[0], validate_regular(s.network).max_deviation_deg)

    traj = run_until(state, scenario.control, scenario.stop, scenario.thresholds, embeddedness_stride=0,
                     on_sample=on_sample)
    samples = traj.samples
    checks: Dict[str, Dict[str, Any]] = {
        "herring_deg": {"value": worst_angle[0], "limit": 0.5, "passed": worst_angle[0] < 0.5},
    }
    ratios = []
    for a, b in zip(samples[:-1], samples[1:]):
        scale = 0.5 * (a.int_k2 + b.int_k2)
        if b.t > a.t and scale > 1e-8:
            ratios.append(length_dissipation_residual([a, b]) / scale)
    worst = max(ratios, default=0.0)
    checks["length_dissipation"] = {"value": worst, "limit": 0.02, "passed": worst < 0.02}

    first = extract_loops(state.network)
    half = [s for s in samples if s.t <= samples[0].t + 0.5 * (samples[-1].t - samples[0].t)]
    for lp in first:
        ts, As = loop_series(half, lp.key)
        if len(ts) >= 3:
            res = area_law_residual(ts, As, loop=lp)
            rate = abs(np.polyfit(ts, As, 1)[0]) if len(ts) > 2 else 0.0
            checks[f"area_law_{'_'.join(map(str, lp.key))}"] = {
                "value": res, "limit": 0.01 * max(rate, 1e-12), "passed": res < 0.01 * max(rate, 1e-12)}
    for label, net in (("start", state.network), ("end", traj.final.network)):
        E = embeddedness_measure(net, max(1, scenario.embeddedness_stride)).E
        checks[f"embeddedness_{label}"] = {"value": E, "limit": FOUR_SQRT3, "passed": bool(0.0 < E <= FOUR_SQRT3 + 1e-12)}
    for name, c in checks.items():
        logger.info("check %s: %.6g (limit %.6g) %s", name, c["value"], c["limit"], "ok" if c["passed"] else "FAILED")
    return checks


# ------------------- Atlas -------------------
def atlas_summary(export_dir: Optional[str] = None) -> List[Dict[str, Any]]:
    """Certification summary of every profile; optionally export each as network JSON and SVG."""
    reporter = ReportGenerator()
    rows = []
    for name, prof in sorted(catalog().items()):
        rows.append({
            "name": name,
            "residual": float(prof.residual),
            "junction_defect": float(prof.junction_defect),
            "certified": bool(prof.certified),
            "symmetry_axes": int(prof.symmetry_axes),
            "parameters": {k: float(v) for k, v in sorted(prof.parameters.items())},
        })
        if export_dir:
            os.makedirs(export_dir, exist_ok=True)
            with open(os.path.join(export_dir, f"{name}.json"), "w", encoding="utf-8") as f:
                json.dump(network_to_dict(prof.network), f, sort_keys=True)
            reporter.emit_snapshot(prof.network, os.path.join(export_dir, f"{name}.svg"), title=name)
    return rows
