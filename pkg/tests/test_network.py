import json

import numpy as np
import pytest

from geometry.primitives import Curve
from network.junctions import project_junctions
from network.model import Network, TopologyTag
from network.presets import PRESETS, build_preset
from network.serialize import dumps_network, loads_network, network_from_dict, network_to_dict
from network.topology import (classify_topology, extract_loops, eyeglasses_b_regions, loop_area_rate,
                              validate_regular)
from utils.errors import InvalidArgument, ScenarioError, UnsupportedTopology

TWO_JUNCTION = {
    "tree": TopologyTag.TREE,
    "collapsing_tree": TopologyTag.TREE,
    "lens": TopologyTag.LENS,
    "island": TopologyTag.ISLAND,
    "theta": TopologyTag.THETA,
    "eyeglassesA": TopologyTag.EYEGLASSES_A,
    "eyeglassesB": TopologyTag.EYEGLASSES_B,
}


@pytest.mark.parametrize("name,tag", sorted(TWO_JUNCTION.items()))
def test_presets_are_regular_and_tagged(name, tag):
    net = build_preset(name)
    assert validate_regular(net).passed
    assert classify_topology(net) is tag
    assert net.topology is tag


def test_preset_registry_covers_every_topology():
    assert set(TWO_JUNCTION) <= set(PRESETS)


def test_unknown_preset():
    with pytest.raises(InvalidArgument):
        build_preset("pentagon")


def test_lens_endpoints_inside_loop_are_rejected():
    with pytest.raises(InvalidArgument):
        build_preset("lens", half_width=0.8, domain_radius=0.5)


def test_triod_has_no_two_junction_tag():
    net = build_preset("triod")
    assert validate_regular(net).passed
    with pytest.raises(UnsupportedTopology):
        classify_topology(net)


@pytest.mark.parametrize("name,expected", [
    ("circle", [0]),
    ("lens", [2]),
    ("island", [1]),
    ("theta", [2, 2]),
    ("eyeglassesA", [1, 1]),
    ("eyeglassesB", [1, 1]),
])
def test_loop_corner_counts(name, expected):
    loops = extract_loops(build_preset(name))
    assert sorted(lp.m for lp in loops) == expected


def test_area_rates_follow_corner_count(lens_net, island_net):
    (lens_loop,) = extract_loops(lens_net)
    (island_loop,) = extract_loops(island_net)
    assert loop_area_rate(lens_loop) == pytest.approx(-4.0 * np.pi / 3.0)
    assert loop_area_rate(island_loop) == pytest.approx(-5.0 * np.pi / 3.0)


def test_eyeglasses_b_reflex_corner_and_regions():
    net = build_preset("eyeglassesB", outer_area=1.0)
    loops = sorted(extract_loops(net), key=lambda lp: lp.area)
    assert loop_area_rate(loops[0]) == pytest.approx(-5.0 * np.pi / 3.0)
    assert loop_area_rate(loops[1]) == pytest.approx(-7.0 * np.pi / 3.0)
    regions = eyeglasses_b_regions(net)
    assert regions["A3"] == pytest.approx(regions["A1"] + regions["A2"])
    assert regions["A3"] == pytest.approx(1.0, rel=1e-2)


def test_eyeglasses_a_has_no_nested_regions():
    with pytest.raises(UnsupportedTopology):
        eyeglasses_b_regions(build_preset("eyeglassesA"))


def test_symmetric_theta_cells(theta_net):
    areas = sorted(lp.area for lp in extract_loops(theta_net))
    assert areas[0] == pytest.approx(1.0, rel=1e-3)
    assert areas[1] == pytest.approx(1.0, rel=1e-3)


def test_lens_area_parameter(lens_net):
    (loop,) = extract_loops(lens_net)
    assert loop.area == pytest.approx(0.3, rel=1e-2)


def test_project_junctions_restores_herring():
    net = build_preset("triod", h=0.05)
    shift = np.array([0.004, -0.003])
    curves = []
    for c in net.curves:
        nodes = c.nodes.copy()
        nodes[0] = nodes[0] + shift
        curves.append(Curve(nodes=nodes))
    moved = net.with_curves(curves)
    assert not validate_regular(moved).passed
    fixed = project_junctions(moved)
    assert validate_regular(fixed).passed
    assert np.linalg.norm(np.asarray(fixed.junctions[0].position)) < 0.01


def test_serialized_network_reloads(lens_net):
    text = dumps_network(lens_net)
    again = loads_network(text)
    assert dumps_network(again) == text
    assert again.topology is TopologyTag.LENS
    assert [len(j.incident) for j in again.junctions] == [3, 3]
    for a, b in zip(lens_net.curves, again.curves):
        np.testing.assert_array_equal(a.nodes, b.nodes)


def test_network_json_shape(lens_net):
    data = json.loads(dumps_network(lens_net))
    assert data["schema_version"] == 1
    assert data["junctions"][0] == [[0, "start"], [1, "start"], [2, "start"]]
    assert data["endpoints"] == [[2, "end"], [3, "end"]]


def test_missing_field_names_it(lens_net):
    data = network_to_dict(lens_net)
    del data["curves"][0]["nodes"]
    with pytest.raises(ScenarioError) as info:
        network_from_dict(data)
    assert "nodes" in str(info.value)


def test_bad_json_reports_line():
    with pytest.raises(ScenarioError) as info:
        loads_network('{\n "curves": [,]\n}')
    assert info.value.line == 2


def test_free_curve_end_is_rejected():
    c = Curve(nodes=np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]))
    with pytest.raises(InvalidArgument):
        Network.assemble([c], [], [(0, "start")])


def test_three_junctions_are_unsupported(theta_net):
    j = [[(i.curve, i.end.value) for i in jj.incident] for jj in theta_net.junctions]
    with pytest.raises(UnsupportedTopology):
        Network.assemble(theta_net.curves, j + [j[0]])


def test_endpoint_count_must_fit_junction_count():
    a = Curve(nodes=np.linspace([0.0, 0.0], [1.0, 0.0], 10))
    b = Curve(nodes=np.linspace([0.0, 1.0], [1.0, 1.0], 10))
    with pytest.raises(InvalidArgument, match="endpoints"):
        Network.assemble([a, b], [], [(0, "start"), (0, "end"), (1, "start"), (1, "end")])
