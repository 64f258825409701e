import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError
from scipy.sparse.linalg import spsolve

from app.services.runner import scenario_from_dict
from diagnostics.density import rescale
from diagnostics.quantities import area_law_residual, length_dissipation_residual, loop_series, measure, steiner_check
from flow.engine import StepControl, assemble_curve_system, initial_state, step
from flow.tangential import tangential_velocity
from flow.trajectory import StopCriteria, frozen_curves, run_until
from geometry.primitives import Curve, hausdorff_polylines, rotation
from network.model import Network, TopologyTag
from network.presets import build_preset
from network.topology import extract_loops, eyeglasses_b_regions, validate_regular
from singularity.detect import EventKind, Thresholds
from singularity.transition import standard_transition
from tests.helpers import circle_nodes
from utils.errors import InvalidArgument, MeshCollapse, NotEmbedded


def test_step_control_bounds():
    with pytest.raises(ValidationError):
        StepControl(cfl=0.6)
    with pytest.raises(ValidationError):
        StepControl(nodes_per_curve=4)
    assert StepControl(h_target=0.1).target_nodes(0.2) == 9
    assert StepControl(h_target=0.01, nodes_per_curve=50).target_nodes(10.0) == 50


def test_tangential_velocity_vanishes_on_uniform_loop():
    c = Curve(nodes=circle_nodes(n=40), closed=True)
    np.testing.assert_allclose(tangential_velocity(c), 0.0, atol=1e-9)


def test_tangential_velocity_interpolates_end_speeds():
    c = Curve(nodes=np.column_stack([np.linspace(0.0, 1.0, 11), np.zeros(11)]))
    lam = tangential_velocity(c, start_speed=2.0, end_speed=-1.0)
    assert lam[0] == pytest.approx(2.0)
    assert lam[-1] == pytest.approx(-1.0)
    assert lam[5] == pytest.approx(0.5)


def test_tangential_velocity_pushes_towards_larger_gap():
    x = np.array([0.0, 0.1, 0.2, 0.6, 0.7, 1.0])
    lam = tangential_velocity(Curve(nodes=np.column_stack([x, np.zeros_like(x)])))
    assert lam[2] > 0.0
    assert lam[3] < 0.0


def test_implicit_solve_shrinks_regular_polygon():
    r, n, dt = 0.7, 48, 1e-3
    c = Curve(nodes=circle_nodes(radius=r, n=n), closed=True)
    mat, rhs = assemble_curve_system(c, dt, np.zeros(n))
    assert mat.shape == (2 * n, 2 * n)
    out = spsolve(mat, rhs).reshape(-1, 2)
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), r / (1.0 + dt / r ** 2), rtol=1e-10)


def test_initial_state_rejects_irregular_junction():
    tips = [np.array([1.0, 0.0]), np.array([-1.0, 1.0]) / np.sqrt(2), np.array([0.0, -1.0])]
    curves = [Curve(nodes=np.linspace([0.0, 0.0], tip, 10)) for tip in tips]
    net = Network.assemble(curves, [[(0, "start"), (1, "start"), (2, "start")]],
                           [(0, "end"), (1, "end"), (2, "end")])
    with pytest.raises(InvalidArgument):
        initial_state(net)


def test_initial_state_rejects_figure_eight():
    t = np.linspace(0.0, 2.0 * np.pi, 120, endpoint=False) + 0.013
    eight = Curve(nodes=np.column_stack([np.sin(t), np.sin(t) * np.cos(t)]), closed=True)
    net = Network.assemble([eight], [])
    with pytest.raises(NotEmbedded):
        initial_state(net)


def test_initial_state_rejects_mislabelled_topology(lens_net):
    with pytest.raises(InvalidArgument, match="tagged Theta"):
        initial_state(lens_net.with_topology(TopologyTag.THETA))


def test_dt_floor_raises_mesh_collapse():
    state = initial_state(build_preset("circle", radius=1.0, n=64))
    with pytest.raises(MeshCollapse):
        step(state, StepControl(dt_floor=1.0))


def test_lens_steps_keep_herring_and_endpoints(lens_net):
    control = StepControl(h_target=0.02)
    state = initial_state(lens_net)
    ends = [np.asarray(e.position) for e in lens_net.endpoints]
    lengths = [lens_net.total_length]
    for _ in range(30):
        state = step(state, control)
        lengths.append(state.network.total_length)
        assert validate_regular(state.network).passed
    for before, e in zip(ends, state.network.endpoints):
        np.testing.assert_allclose(np.asarray(e.position), before, atol=1e-12)
    assert np.all(np.diff(lengths) < 0.0)
    assert state.step_index == 30


def test_length_dissipation_on_lens(lens_net):
    control = StepControl(h_target=0.02)
    state = initial_state(lens_net)
    a = measure(state.network, state.t)
    for _ in range(20):
        state = step(state, control)
    b = measure(state.network, state.t)
    residual = length_dissipation_residual([a, b])
    assert residual < 0.1 * 0.5 * (a.int_k2 + b.int_k2)


def test_frozen_curves_pick_short_internal_curves():
    net = build_preset("tree", half_length=0.05, h=0.01)
    frozen = frozen_curves(net, Thresholds().resolve(0.02))
    assert frozen == {0}


@pytest.mark.slow
def test_shrinking_circle_oracle():
    net = build_preset("circle", radius=1.0, n=256)
    control = StepControl(h_target=2.0 * np.pi / 256, nodes_per_curve=256)
    traj = run_until(initial_state(net), control, StopCriteria(max_time=0.45, sample_every=0.05))
    assert traj.reason == "max_time"
    assert traj.final.t == pytest.approx(0.45, abs=1e-12)
    radius = np.linalg.norm(traj.final.network.curves[0].nodes, axis=1)
    assert np.max(np.abs(radius - np.sqrt(1.0 - 2.0 * 0.45))) < 1e-3
    assert np.all(np.diff([s.t for s in traj.samples]) > 0.0)

    rest = run_until(traj.final, control, StopCriteria(max_time=0.2, sample_every=0.005))
    assert rest.reason == "event"
    assert rest.event.kind is EventKind.REGION_COLLAPSE
    assert rest.event.t == pytest.approx(0.5, rel=1e-2)
    assert rest.event.T_estimate == pytest.approx(0.5, rel=1e-2)


@pytest.mark.slow
def test_lens_area_law():
    net = build_preset("lens", area=0.3, h=0.02)
    (loop,) = extract_loops(net)
    traj = run_until(initial_state(net), StepControl(h_target=0.02), StopCriteria(max_time=0.035, sample_every=0.001))
    ts, As = loop_series(traj.samples, loop.key)
    assert len(ts) > 20
    slope = np.polyfit(ts, As, 1)[0]
    assert slope == pytest.approx(-4.0 * np.pi / 3.0, rel=2e-2)
    assert area_law_residual(ts, As, loop=loop) < 2e-2 * 4.0 * np.pi / 3.0


@settings(max_examples=5, deadline=None)
@given(angle=st.floats(-np.pi, np.pi))
def test_step_commutes_with_rotations(angle):
    net = build_preset("lens", area=0.3, h=0.02)
    rot = rotation(angle)
    control = StepControl(h_target=0.02)
    a = initial_state(net)
    b = initial_state(net.transformed(rot, np.zeros(2)))
    for _ in range(5):
        a, b = step(a, control), step(b, control)
    assert b.t == pytest.approx(a.t, rel=1e-9)
    for ca, cb in zip(a.network.curves, b.network.curves):
        np.testing.assert_allclose(cb.nodes, ca.nodes @ rot.T, atol=1e-8)


def test_steiner_triod_is_stationary():
    net = build_preset("triod", radius=1.0, h=0.05)
    control = StepControl(h_target=0.05, nodes_per_curve=60)
    traj = run_until(initial_state(net), control, StopCriteria(max_time=0.05, sample_every=0.01))
    final = traj.final.network
    assert traj.reason == "max_time"
    np.testing.assert_allclose(np.asarray(final.junctions[0].position), 0.0, atol=1e-9)
    for before, after in zip(net.curves, final.curves):
        chord = before.nodes[-1] - before.nodes[0]
        offsets = (after.nodes - before.nodes[0]) @ np.array([-chord[1], chord[0]]) / np.linalg.norm(chord)
        assert np.max(np.abs(offsets)) < 1e-9
    assert final.total_length == pytest.approx(3.0, rel=1e-9)
    assert steiner_check(final)["passed"] == 1.0
    assert max(s.max_abs_k for s in traj.samples) < 1e-6


def _flow_for(state, control, duration):
    t_end = state.t + duration
    while state.t < t_end - 1e-15:
        state = step(state, control, dt_max=t_end - state.t)
        assert validate_regular(state.network).passed
    return state


@pytest.mark.slow
def test_tree_restart_grows_and_barely_depends_on_delta():
    h = 0.01
    net = build_preset("collapsing_tree", half_length=0.05, h=h)
    control = StepControl(h_target=h)
    duration = 100 * control.cfl * h ** 2
    delta = 8 * h
    finals = []
    for d in (delta, 0.5 * delta):
        after, record = standard_transition(net, 0, delta=d, h=h)
        assert record.post is TopologyTag.TREE
        assert validate_regular(after).passed
        inserted = after.curves[0].length
        state = _flow_for(initial_state(after), control, duration)
        assert state.t == pytest.approx(duration)
        assert state.network.curves[0].length > inserted
        finals.append(np.vstack([c.nodes for c in state.network.curves]))
    assert hausdorff_polylines(*finals) < 2.0 * delta


@pytest.mark.slow
def test_tree_converges_to_straight_segments():
    net = build_preset("tree", half_length=0.25, jitter_deg=5.0, seed=7, h=0.02)
    traj = run_until(initial_state(net), StepControl(h_target=0.02), StopCriteria(max_time=2.0, sample_every=0.05))
    assert traj.reason == "max_time"
    assert traj.samples[0].int_k2 > 1e-2
    assert traj.samples[-1].int_k2 < 1e-4
    assert traj.samples[-1].max_abs_k < 1e-3
    assert traj.final.network.topology is TopologyTag.TREE


@pytest.mark.slow
def test_enlarged_circle_stays_self_similar():
    radius = 1.2
    T = 0.5 * radius ** 2
    net = build_preset("circle", radius=radius, n=256)
    errors = []

    def record(state, s):
        if s.t < 0.8 * T:
            frame = rescale(state.network, (0.0, 0.0), s.t, T)
            errors.append(float(np.max(np.abs(np.linalg.norm(frame.network.curves[0].nodes, axis=1) - 1.0))))

    run_until(initial_state(net), StepControl(h_target=0.02, nodes_per_curve=256),
              StopCriteria(max_time=0.8 * T, sample_every=0.02 * T), on_sample=record)
    assert len(errors) > 30
    assert errors[0] < 1e-9
    assert max(errors) < 5e-3


def _scenario(name, **overrides):
    with open(os.path.join(os.path.dirname(__file__), "..", "scenarios", f"{name}.json"), encoding="utf-8") as f:
        data = json.load(f)
    data.update(overrides)
    return scenario_from_dict(data)


@pytest.mark.slow
def test_island_area_law():
    scenario = _scenario("island")
    net = scenario.build_network()
    (loop,) = extract_loops(net)
    traj = run_until(initial_state(net), scenario.control, StopCriteria(max_time=0.025, sample_every=0.001),
                     scenario.thresholds)
    assert traj.reason == "max_time"
    ts, As = loop_series(traj.samples, loop.key)
    assert np.polyfit(ts, As, 1)[0] == pytest.approx(-5.0 * np.pi / 3.0, rel=3e-2)


@pytest.mark.slow
def test_eyeglasses_b_regions_shrink_in_ratio_five_two_seven():
    params = {"outer_area": 1.0, "inner_leg": 0.3, "gap": 0.6, "h": 0.01}
    scenario = _scenario("eyeglasses_b", preset={"name": "eyeglassesB", "params": params},
                         control={"h_target": 0.01, "nodes_per_curve": 400})
    net = scenario.build_network()
    traj = run_until(initial_state(net), scenario.control, StopCriteria(max_time=0.005, sample_every=0.00025),
                     scenario.thresholds)
    assert traj.reason == "max_time"
    start, end = eyeglasses_b_regions(net), eyeglasses_b_regions(traj.final.network)
    drops = np.array([start[k] - end[k] for k in ("A1", "A2", "A3")])
    np.testing.assert_allclose(drops / drops[2], [5.0 / 7.0, 2.0 / 7.0, 1.0], atol=0.03)
