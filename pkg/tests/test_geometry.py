import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geometry.intersect import crossing_pairs, is_simple_polygon, point_in_polygon, segment_hits_network
from geometry.primitives import (ConvexDomain, Curve, hausdorff_polylines, polygon_area, resample_equidistant,
                                 rotation, shoelace)
from tests.helpers import circle_nodes
from utils.errors import DegenerateCurve, InvalidArgument, NotSimple

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_circle_curvature_is_inverse_radius():
    c = Curve(nodes=circle_nodes(radius=2.0, n=64), closed=True)
    np.testing.assert_allclose(c.curvature, 0.5, atol=1e-10)
    assert c.length == pytest.approx(2.0 * 64 * 2.0 * np.sin(np.pi / 64))


def test_clockwise_circle_has_negative_curvature():
    c = Curve(nodes=circle_nodes(n=64)[::-1], closed=True)
    assert np.all(c.curvature < 0)


def test_open_curve_end_curvature_is_one_sided():
    x = np.linspace(0.5, 1.5, 101)
    c = Curve(nodes=np.column_stack([x, x ** 2]))
    exact = 2.0 / (1.0 + 4.0 * x ** 2) ** 1.5
    assert c.curvature[0] == pytest.approx(exact[0], abs=3e-3)
    assert c.curvature[-1] == pytest.approx(exact[-1], abs=3e-3)
    np.testing.assert_allclose(c.curvature[1:-1], exact[1:-1], atol=3e-3)


@settings(max_examples=30, deadline=None)
@given(scale=st.floats(0.1, 10.0), angle=st.floats(0.0, 2.0 * np.pi),
       dx=st.floats(-5.0, 5.0), dy=st.floats(-5.0, 5.0))
def test_curvature_under_similarity(scale, angle, dx, dy):
    t = np.linspace(0.0, 2.0 * np.pi, 90, endpoint=False)
    ellipse = Curve(nodes=np.column_stack([2.0 * np.cos(t), np.sin(t)]), closed=True)
    moved = ellipse.transformed(scale * rotation(angle), np.array([dx, dy]))
    np.testing.assert_allclose(moved.curvature, ellipse.curvature / scale, rtol=1e-7, atol=1e-9)


def test_shoelace_orientation():
    assert shoelace(SQUARE) == pytest.approx(1.0)
    assert shoelace(SQUARE[::-1]) == pytest.approx(-1.0)


def test_polygon_area_rejects_bowtie():
    bowtie = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    assert not is_simple_polygon(bowtie)
    with pytest.raises(NotSimple):
        polygon_area(bowtie)
    assert polygon_area(np.vstack([SQUARE, SQUARE[:1]])) == pytest.approx(1.0)


def test_zero_length_segment_is_degenerate():
    with pytest.raises(DegenerateCurve):
        Curve(nodes=np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]]))


def test_curve_needs_enough_nodes():
    with pytest.raises(InvalidArgument):
        Curve(nodes=np.array([[0.0, 0.0], [1.0, 0.0]]), closed=True)


def test_resample_keeps_open_ends_and_length():
    t = np.linspace(0.0, np.pi / 2, 400)
    arc = Curve(nodes=np.column_stack([np.cos(t), np.sin(t)]))
    out = resample_equidistant(arc, 40)
    assert out.n == 40
    np.testing.assert_array_equal(out.nodes[0], arc.nodes[0])
    np.testing.assert_array_equal(out.nodes[-1], arc.nodes[-1])
    h = arc.length / 39
    assert abs(out.length - arc.length) <= 0.5 * h ** 2 * arc.length
    assert hausdorff_polylines(out.nodes, arc.nodes) <= arc.seg_lengths.max() + h


def test_resample_straight_line_is_equidistant():
    line = Curve(nodes=np.array([[0.0, 0.0], [0.3, 0.0], [2.0, 0.0]]))
    out = resample_equidistant(line, 11)
    np.testing.assert_allclose(out.seg_lengths, 0.2, atol=1e-12)


def test_resample_rejects_tiny_n():
    with pytest.raises(InvalidArgument):
        resample_equidistant(Curve(nodes=SQUARE, closed=True), 2)


def test_point_in_polygon():
    inside = point_in_polygon(np.array([[0.5, 0.5], [1.5, 0.5], [-0.1, 0.2]]), SQUARE)
    assert inside.tolist() == [True, False, False]


def test_crossing_pairs_ignores_shared_nodes():
    starts = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    ends = np.array([[1.0, 1.0], [1.0, 0.0], [2.0, 1.0]])
    pairs = crossing_pairs(starts, ends)
    assert pairs.tolist() == [[0, 1]]


def test_segment_hits_network_excludes_given_points():
    lines = [np.array([[0.0, -1.0], [0.0, 1.0]])]
    assert segment_hits_network([-1.0, 0.0], [1.0, 0.0], lines)
    assert not segment_hits_network([-1.0, 0.0], [1.0, 0.0], lines, excluded=[[0.0, 0.0]])
    assert not segment_hits_network([0.5, -1.0], [0.5, 1.0], lines)


def test_convex_domain_rejects_notch():
    with pytest.raises(InvalidArgument):
        ConvexDomain(boundary=np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 0.5], [2.0, 2.0], [0.0, 2.0]]))


def test_disk_keeps_anchors_as_vertices():
    anchor = np.array([np.cos(0.3), np.sin(0.3)])
    domain = ConvexDomain.disk(radius=1.0, anchors=[anchor])
    assert np.min(np.linalg.norm(domain.boundary - anchor, axis=1)) == 0.0
    assert domain.distance_to_boundary(anchor) == pytest.approx(0.0, abs=1e-12)
    assert domain.contains(np.array([[0.0, 0.0]]))[0]


def test_disk_rejects_anchor_off_circle():
    with pytest.raises(InvalidArgument):
        ConvexDomain.disk(radius=1.0, anchors=[[0.5, 0.0]])
