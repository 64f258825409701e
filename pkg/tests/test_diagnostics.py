import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diagnostics.density import gaussian_density, monotonicity_check, monotonicity_functional, rescale
from diagnostics.embeddedness import FOUR_SQRT3, embeddedness_measure, reflected_measure
from diagnostics.quantities import (
    area_law_residual,
    length_dissipation_residual,
    loop_series,
    measure,
    nominal_area_rate,
    steiner_check,
)
from flow.engine import StepControl, initial_state, step
from flow.trajectory import StopCriteria, run_until
from geometry.primitives import Curve, rotation
from network.model import Network
from network.presets import build_preset
from network.topology import extract_loops
from tests.helpers import circle_nodes, fake_sample
from utils.errors import InvalidArgument, NotEmbedded

SQRT_2PI = np.sqrt(2.0 * np.pi)


def test_density_of_a_line_is_one():
    net = build_preset("segment", half_length=50.0)
    assert gaussian_density(net, (0.0, 0.0), 1.0, 0.0) == pytest.approx(1.0, abs=1e-6)


def test_density_at_triod_centre_is_three_halves():
    net = build_preset("triod", radius=10.0)
    assert gaussian_density(net, (0.0, 0.0), 0.5, 0.0) == pytest.approx(1.5, abs=1e-6)


def test_density_of_self_similar_circle():
    tau = 0.5
    net = Network(curves=(Curve(nodes=circle_nodes(radius=np.sqrt(2.0 * tau), n=512), closed=True),))
    value = gaussian_density(net, (0.0, 0.0), 1.0, 1.0 - tau)
    assert value == pytest.approx(SQRT_2PI * np.exp(-0.5), abs=1e-3)


def test_density_needs_time_before_t0():
    net = build_preset("circle", radius=1.0, n=64)
    with pytest.raises(InvalidArgument):
        gaussian_density(net, (0.0, 0.0), 0.3, 0.3)
    with pytest.raises(InvalidArgument):
        rescale(net, (0.0, 0.0), 0.5, 0.5)


def test_unit_circle_is_a_rescaled_shrinker():
    net = build_preset("circle", radius=1.0, n=512)
    frame = rescale(net, (0.0, 0.0), 0.0, 0.5)
    assert frame.factor == pytest.approx(1.0)
    terms = monotonicity_functional(frame)
    assert terms.value == pytest.approx(2.0 * np.pi * np.exp(-0.5), rel=1e-4)
    assert terms.defect < 1e-6
    assert terms.boundary == 0.0


def test_monotonicity_check_on_exact_circle_flow():
    frames = []
    for t in (0.0, 0.1, 0.2):
        net = build_preset("circle", radius=np.sqrt(1.0 - 2.0 * t), n=512)
        frames.append(rescale(net, (0.0, 0.0), t, 0.5))
    check = monotonicity_check(frames)
    assert check.max_residual < 1e-4
    assert check.non_increasing
    assert check.log_times == sorted(check.log_times)
    with pytest.raises(InvalidArgument):
        monotonicity_check(frames[:1])


def test_length_dissipation_residual():
    a = fake_sample(0.0, 1.0, L=1.0, int_k2=2.0)
    b = fake_sample(0.1, 1.0, L=0.8, int_k2=2.0)
    assert length_dissipation_residual([a, b]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InvalidArgument):
        length_dissipation_residual([a])
    with pytest.raises(InvalidArgument):
        length_dissipation_residual([b, a])


def test_area_law_residual():
    assert nominal_area_rate(6) == pytest.approx(0.0)
    times = [0.0, 0.01, 0.02, 0.03]
    areas = [0.5 + nominal_area_rate(2) * t for t in times]
    assert area_law_residual(times, areas, m=2) == pytest.approx(0.0, abs=1e-9)
    assert area_law_residual(times, areas, m=0) == pytest.approx(2.0 * np.pi / 3.0, rel=1e-9)
    with pytest.raises(InvalidArgument):
        area_law_residual(times, areas)
    with pytest.raises(InvalidArgument):
        area_law_residual(times[:1], areas[:1], m=2)


def test_measure_and_loop_series(lens_net):
    s = measure(lens_net, 0.0)
    assert s.L == pytest.approx(sum(s.L_i))
    assert len(s.A_i) == 1
    assert s.A_i[0] == pytest.approx(0.3, rel=1e-2)
    assert s.max_abs_k > 1.0
    ts, As = loop_series([s, s], s.loop_keys[0])
    assert list(ts) == [0.0, 0.0]
    assert len(loop_series([s], (99,))[0]) == 0


def test_steiner_check():
    assert steiner_check(build_preset("triod"))["passed"] == 1.0
    assert steiner_check(build_preset("lens", area=0.3))["passed"] == 0.0


@pytest.mark.parametrize("name", ["circle", "lens", "island", "theta", "tree"])
def test_embeddedness_is_bounded(name):
    report = embeddedness_measure(build_preset(name), stride=4)
    assert 0.0 < report.E <= FOUR_SQRT3


@settings(max_examples=5, deadline=None)
@given(
    angle=st.floats(-np.pi, np.pi),
    scale=st.floats(0.2, 5.0),
    dx=st.floats(-3.0, 3.0),
    dy=st.floats(-3.0, 3.0),
)
def test_embeddedness_similarity_invariant(angle, scale, dx, dy):
    net = build_preset("lens", area=0.3)
    moved = net.transformed(scale * rotation(angle), np.array([dx, dy]))
    assert embeddedness_measure(moved, 4).E == pytest.approx(embeddedness_measure(net, 4).E, rel=1e-6)


def test_embeddedness_rejects_crossings():
    a = Curve(nodes=circle_nodes(radius=1.0, n=64), closed=True)
    b = Curve(nodes=circle_nodes(radius=1.0, n=64, center=(0.5, 0.0)), closed=True)
    with pytest.raises(NotEmbedded):
        embeddedness_measure(Network(curves=(a, b)))
    with pytest.raises(InvalidArgument):
        embeddedness_measure(build_preset("circle"), stride=0)


def test_reflected_measure():
    lens = build_preset("lens", area=0.3)
    assert 0.0 < reflected_measure(lens, 4) <= FOUR_SQRT3
    circle = build_preset("circle", n=128)
    assert reflected_measure(circle, 2) == embeddedness_measure(circle, 2).E


def _polar_loop(radius, n):
    phi = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    r = radius(phi)
    return Network(curves=(Curve(nodes=np.column_stack([r * np.cos(phi), r * np.sin(phi)]), closed=True),))


def test_minimizing_pair_balances_chord_angle_and_area():
    # waist between a large upper lobe and a smaller lower one
    net = _polar_loop(lambda phi: 1.0 - 0.3 * np.cos(2.0 * phi) + 0.15 * np.sin(phi), 1000)
    report = embeddedness_measure(net, stride=1)
    (loop,) = extract_loops(net)
    assert report.p_tag == report.q_tag == "interior"
    assert report.A_loop == pytest.approx(loop.area, rel=1e-9)
    assert report.A_pq < 0.45 * report.A_loop
    expected = 0.25 * report.E * abs(np.cos(np.pi * report.A_pq / report.A_loop))
    assert expected > 0.05
    for alpha in (report.alpha_p, report.alpha_q):
        assert abs(1.0 / np.tan(alpha)) == pytest.approx(expected, abs=0.05 * 0.25 * report.E)


def test_embeddedness_grows_on_a_thin_neck():
    net = _polar_loop(lambda phi: 1.0 - 0.75 * np.cos(2.0 * phi), 400)
    control = StepControl(h_target=0.005, nodes_per_curve=400, remesh_ratio=50.0)
    state = initial_state(net)
    values = []
    for _ in range(4):
        report = embeddedness_measure(state.network)
        assert report.p_tag == report.q_tag == "interior"
        values.append(report.E)
        for _ in range(10):
            state = step(state, control)
    assert 0.0 < values[0] < 0.25
    assert np.all(np.diff(values) > 0.0)


@pytest.mark.slow
def test_symmetric_theta_rescaled_area_never_increases(theta_net):
    T = 3.0 / (4.0 * np.pi)
    frames = []

    def record(state, s):
        frames.append(rescale(state.network, (0.0, 0.0), s.t, T))

    run_until(initial_state(theta_net), StepControl(h_target=0.02), StopCriteria(max_time=0.06, sample_every=0.005),
              on_sample=record)
    assert len(frames) > 10
    check = monotonicity_check(frames)
    assert check.non_increasing
    assert check.values[-1] < check.values[0]
