import numpy as np
import pytest

from atlas.classify import classify_network, rotation_optimized_distance, shrinker_residual
from atlas.expander import REFERENCE_RAYS, asymptotic_directions, expander_germ, pattern_rotation
from atlas.ode import CurveState, curvature_identity_defect, self_similar_rhs, shrinker_curve_ode_step, trace
from atlas.shrinkers import PROFILE_NAMES, reflection_mismatch, rotated, theta_nonexistence_probe, unit_circle
from geometry.primitives import rotation
from network.topology import validate_regular
from utils.errors import EmptyBlowup, InvalidArgument, StepRejected


def _rays(offset: float) -> np.ndarray:
    return np.column_stack([np.cos(REFERENCE_RAYS + offset), np.sin(REFERENCE_RAYS + offset)])


def _wrap(a):
    return (np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi


def test_unit_circle_state_turns_at_unit_rate():
    rhs = self_similar_rhs(0.0, CurveState(1.0, 0.0, np.pi / 2))
    np.testing.assert_allclose(rhs, [0.0, 1.0, 1.0], atol=1e-15)


def test_trace_closes_the_unit_circle():
    states = trace(CurveState(1.0, 0.0, np.pi / 2), 2.0 * np.pi, ds=0.01)
    end = states[-1]
    assert end.x == pytest.approx(1.0, abs=1e-8)
    assert end.y == pytest.approx(0.0, abs=1e-8)
    assert end.theta == pytest.approx(np.pi / 2 + 2.0 * np.pi, abs=1e-8)
    assert curvature_identity_defect(states) < 1e-6


def test_curvature_identity_on_general_arc():
    states = trace(CurveState(0.5, 0.2, 1.0), 2.0, ds=0.01)
    assert curvature_identity_defect(states) < 1e-3


def test_ode_step_rejection_and_bad_input():
    with pytest.raises(StepRejected) as info:
        shrinker_curve_ode_step(CurveState(2.0, 1.0, 0.3), 0.5, tol=1e-20)
    assert info.value.error_estimate > 0.0
    with pytest.raises(InvalidArgument):
        shrinker_curve_ode_step(CurveState(1.0, 0.0, 0.0), 0.0)
    with pytest.raises(InvalidArgument):
        curvature_identity_defect([CurveState(1.0, 0.0, 0.0)] * 2)


def test_pattern_rotation():
    offset, _ = pattern_rotation(_rays(0.0))
    assert offset == pytest.approx(0.0, abs=1e-12)
    offset, _ = pattern_rotation(_rays(0.3))
    assert offset == pytest.approx(0.3, abs=1e-12)
    square = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(InvalidArgument):
        pattern_rotation(square)
    with pytest.raises(InvalidArgument):
        pattern_rotation(square[:3])


def test_expander_germ_follows_rays():
    germ = expander_germ(_rays(0.3), scale=0.5)
    assert germ.rotation == pytest.approx(0.3, abs=1e-12)
    assert germ.middle_length == pytest.approx(2.0 * germ.b * 0.5)
    assert germ.b > 0.0
    assert germ.residual < 1e-6
    assert len(germ.network.junctions) == 2
    assert validate_regular(germ.network).passed
    headings = np.sort(np.mod(asymptotic_directions(germ), 2.0 * np.pi))
    expected = np.sort(np.mod(REFERENCE_RAYS + 0.3, 2.0 * np.pi))
    assert np.max(np.abs(_wrap(headings - expected))) < 1e-2
    with pytest.raises(InvalidArgument):
        expander_germ(_rays(0.0), scale=0.0)


def test_circle_profile_is_a_shrinker():
    circle = unit_circle()
    assert shrinker_residual(circle.network) < 1e-9
    pts = circle.network.all_nodes()
    distance, _ = rotation_optimized_distance(pts, pts @ rotation(0.4).T)
    assert distance < 1e-2


@pytest.mark.slow
def test_catalog_is_complete_and_certified(atlas):
    assert tuple(atlas) == PROFILE_NAMES
    for name in ("BrakkeSpoon", "StandardLens", "Fish", "Circle", "StandardTriod"):
        assert atlas[name].certified, name


@pytest.mark.slow
def test_profile_symmetries(atlas):
    lens, fish, spoon = atlas["StandardLens"], atlas["Fish"], atlas["BrakkeSpoon"]
    assert reflection_mismatch(lens, 0.0) < 0.05
    assert reflection_mismatch(lens, 90.0) < 0.05
    assert reflection_mismatch(fish, 0.0) < 0.05
    assert reflection_mismatch(fish, 90.0) > 0.1
    assert reflection_mismatch(spoon, 0.0) < 0.05
    assert 0.0 < fish.parameters["phi"] < np.pi / 2


@pytest.mark.slow
def test_theta_probe_has_no_root_while_lens_control_does():
    assert theta_nonexistence_probe(heading_deg=30.0).root_count == 0
    assert theta_nonexistence_probe(heading_deg=-30.0).root_count >= 1


@pytest.mark.slow
@pytest.mark.parametrize("name", ["StandardLens", "BrakkeSpoon", "Circle", "StandardTriod"])
def test_classify_rotated_profile(atlas, name):
    frame = rotated(atlas[name], 0.7).network
    match = classify_network(frame, profiles=atlas.values())
    assert match.name == name
    assert match.distance < 1e-2


def test_classify_far_away_network_is_empty():
    far = unit_circle().network.transformed(np.eye(2), np.array([50.0, 0.0]))
    with pytest.raises(EmptyBlowup):
        classify_network(far, profiles=[unit_circle()])
