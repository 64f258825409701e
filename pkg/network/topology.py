# network/topology.py
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Tuple

import numpy as np

from geometry.intersect import point_in_polygon
from geometry.primitives import shoelace
from network.junctions import exterior_tangents
from network.model import End, Network, TopologyTag
from utils.errors import UnsupportedTopology

DEFAULT_ANGLE_TOL = np.deg2rad(0.5)
CERTIFY_ANGLE_TOL = 1e-6


@dataclass
class RegularityReport:
    angles: List[Tuple[float, float, float]]  # per junction, consecutive gaps in radians
    tangent_sums: List[float]
    max_deviation: float
    passed: bool

    @property
    def max_deviation_deg(self) -> float:
        return float(np.rad2deg(self.max_deviation))


def junction_angles(network: Network, junction_index: int) -> Tuple[float, float, float]:
    """The three angular gaps between consecutive exterior tangents (they sum to 2 pi)."""
    t = exterior_tangents(network, junction_index)
    phi = np.sort(np.mod(np.arctan2(t[:, 1], t[:, 0]), 2.0 * np.pi))
    gaps = np.diff(np.concatenate([phi, phi[:1] + 2.0 * np.pi]))
    return tuple(float(g) for g in gaps)


def validate_regular(network: Network, angle_tol: float = DEFAULT_ANGLE_TOL) -> RegularityReport:
    angles, sums, worst = [], [], 0.0
    for p in range(len(network.junctions)):
        gaps = junction_angles(network, p)
        angles.append(gaps)
        sums.append(float(np.linalg.norm(exterior_tangents(network, p).sum(axis=0))))
        worst = max(worst, max(abs(g - 2.0 * np.pi / 3.0) for g in gaps))
    return RegularityReport(angles=angles, tangent_sums=sums, max_deviation=worst, passed=worst <= angle_tol)


# ---------------------------------------------------------------------------
# Loops
# ---------------------------------------------------------------------------

@dataclass
class Loop:
    curve_ids: Tuple[int, ...]
    m: int
    area: float
    length: float
    polygon: np.ndarray = field(repr=False)
    path: Tuple[Tuple[int, bool], ...] = ()  # (curve index, traversed backwards) in ccw order
    corner_turns: Tuple[float, ...] = ()  # signed turning angle at each junction corner

    @property
    def key(self) -> Tuple[int, ...]:
        return tuple(sorted(self.curve_ids))


def _signed_turn(incoming: np.ndarray, outgoing: np.ndarray) -> float:
    return float(np.arctan2(incoming[0] * outgoing[1] - incoming[1] * outgoing[0], incoming @ outgoing))


def _chain(network: Network, path: List[Tuple[int, bool]]) -> np.ndarray:
    parts = []
    for idx, backwards in path:
        curve = network.curves[idx]
        nodes = curve.nodes[::-1] if backwards else curve.nodes
        parts.append(nodes if curve.closed else nodes[:-1])
    return np.vstack(parts)


def _make_loop(network: Network, path: List[Tuple[int, bool]]) -> Loop:
    polygon = _chain(network, path)
    if shoelace(polygon) < 0:
        path = [(idx, not backwards) for idx, backwards in reversed(path)]
        polygon = _chain(network, path)
    turns = []
    if not (len(path) == 1 and network.curves[path[0][0]].closed):
        for k, (idx, backwards) in enumerate(path):
            nxt_idx, nxt_back = path[(k + 1) % len(path)]
            cur = network.curves[idx].nodes
            nxt = network.curves[nxt_idx].nodes
            cur = cur[::-1] if backwards else cur
            nxt = nxt[::-1] if nxt_back else nxt
            incoming = cur[-1] - cur[-2]
            outgoing = nxt[1] - nxt[0]
            turns.append(_signed_turn(incoming / np.linalg.norm(incoming), outgoing / np.linalg.norm(outgoing)))
    ids = tuple(idx for idx, _ in path)
    return Loop(
        curve_ids=ids,
        m=len(turns),
        area=abs(shoelace(polygon)),
        length=float(sum(network.curves[i].length for i in ids)),
        polygon=polygon,
        path=tuple(path),
        corner_turns=tuple(turns),
    )


def _interior_probe(network: Network, idx: int) -> np.ndarray:
    nodes = network.curves[idx].nodes
    return nodes[len(nodes) // 2]


def extract_loops(network: Network) -> List[Loop]:
    """
    Minimal Jordan loops: periodic curves, curves leaving and re-entering the
    same junction, and two-curve cycles between the two junctions that enclose
    no other curve of the same junction pair.
    """
    loops: List[Loop] = []
    for i, c in enumerate(network.curves):
        if c.closed:
            loops.append(_make_loop(network, [(i, False)]))
    for i in network.closed_curve_indices():
        loops.append(_make_loop(network, [(i, False)]))
    roles = network.end_roles()
    groups: Dict[Tuple[int, int], List[Tuple[int, bool]]] = {}
    for i, c in enumerate(network.curves):
        a, b = roles.get((i, End.START)), roles.get((i, End.END))
        if a and b and a[0] == b[0] == "junction" and a[1] != b[1]:
            # backwards when it starts at the higher-numbered junction
            groups.setdefault((min(a[1], b[1]), max(a[1], b[1])), []).append((i, a[1] > b[1]))
    for bridges in groups.values():
        for (i, bi), (k, bk) in combinations(bridges, 2):
            loop = _make_loop(network, [(i, bi), (k, not bk)])
            others = [o for o, _ in bridges if o not in (i, k)]
            if others:
                probes = np.array([_interior_probe(network, o) for o in others])
                if np.any(point_in_polygon(probes, loop.polygon)):
                    continue
            loops.append(loop)
    return loops


def loop_area_rate(loop: Loop) -> float:
    """
    Exact area rate of a loop under the flow: -2 pi plus pi/3 for every convex
    120 degree corner and minus pi/3 for every reflex one.
    """
    return -2.0 * np.pi + sum(np.sign(t) * np.pi / 3.0 for t in loop.corner_turns)


# ---------------------------------------------------------------------------
# Topology
# ---------------------------------------------------------------------------

def _loops_nested(network: Network, a: int, b: int) -> bool:
    pa = network.curves[a].nodes[:-1]
    pb = network.curves[b].nodes[:-1]
    return bool(point_in_polygon(_interior_probe(network, a)[None, :], pb)[0]
                or point_in_polygon(_interior_probe(network, b)[None, :], pa)[0])


def classify_topology(network: Network) -> TopologyTag:
    if len(network.junctions) != 2:
        raise UnsupportedTopology(f"topology tags need two triple junctions, found {len(network.junctions)}")
    closed = network.closed_curve_indices()
    key = (len(closed), len(network.endpoints), len(network.curves))
    table: Dict[Tuple[int, int, int], TopologyTag] = {
        (0, 4, 5): TopologyTag.TREE,
        (0, 2, 4): TopologyTag.LENS,
        (1, 2, 4): TopologyTag.ISLAND,
        (0, 0, 3): TopologyTag.THETA,
    }
    if key in table:
        return table[key]
    if key == (2, 0, 3):
        return TopologyTag.EYEGLASSES_B if _loops_nested(network, *closed) else TopologyTag.EYEGLASSES_A
    raise UnsupportedTopology(
        f"no network with {key[0]} closed curves, {key[1]} endpoints and {key[2]} curves has a tag"
    )


def eyeglasses_b_regions(network: Network) -> Dict[str, float]:
    """Inner loop area A1, annulus A2 and outer loop area A3 = A1 + A2."""
    closed = network.closed_curve_indices()
    if len(closed) != 2 or not _loops_nested(network, *closed):
        raise UnsupportedTopology("region bookkeeping needs nested eyeglasses")
    areas = sorted(abs(shoelace(network.curves[i].nodes[:-1])) for i in closed)
    return {"A1": areas[0], "A2": areas[1] - areas[0], "A3": areas[1]}


def tag_or_none(network: Network) -> Optional[TopologyTag]:
    try:
        return classify_topology(network)
    except UnsupportedTopology:
        return None
