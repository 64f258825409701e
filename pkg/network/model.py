# network/model.py
"""
Network data model: curves glued at triple junctions and fixed endpoints.

Each curve end is referenced by an Incidence (curve id, End). Curves are
stored in a tuple and addressed by position; junctions and endpoints only
refer to them, so a state update swaps the curve tuple and keeps the
combinatorics.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from geometry.primitives import ConvexDomain, Curve, Point2, diameter, no_three_collinear
from utils.errors import InvalidArgument, UnsupportedTopology

JUNCTION_TOL = 1e-9
# endpoint counts a connected network with 0, 1 or 2 triple junctions can carry
ENDPOINT_COUNTS = {0: (0, 2), 1: (1, 3), 2: (0, 2, 4)}


class End(str, Enum):
    START = "start"
    END = "end"


class TopologyTag(str, Enum):
    TREE = "Tree"
    LENS = "Lens"
    ISLAND = "Island"
    THETA = "Theta"
    EYEGLASSES_A = "EyeglassesA"
    EYEGLASSES_B = "EyeglassesB"


@dataclass(frozen=True)
class Incidence:
    curve: int
    end: End

    def node_index(self, curve: Curve) -> int:
        return 0 if self.end is End.START else curve.n - 1


@dataclass(frozen=True)
class Junction:
    position: Point2
    incident: Tuple[Incidence, Incidence, Incidence]
    label: str = "O1"


@dataclass(frozen=True)
class Endpoint:
    position: Point2
    incident: Incidence
    label: str = "P1"


@dataclass(frozen=True, eq=False)
class Network:
    curves: Tuple[Curve, ...]
    junctions: Tuple[Junction, ...] = ()
    endpoints: Tuple[Endpoint, ...] = ()
    domain: Optional[ConvexDomain] = None
    topology: Optional[TopologyTag] = None
    curve_ids: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "curves", tuple(self.curves))
        object.__setattr__(self, "junctions", tuple(self.junctions))
        object.__setattr__(self, "endpoints", tuple(self.endpoints))
        if not self.curve_ids:
            object.__setattr__(self, "curve_ids", tuple(range(len(self.curves))))
        if len(self.curve_ids) != len(self.curves):
            raise InvalidArgument("curve_ids must label every curve")

    # -- construction -----------------------------------------------------

    @classmethod
    def assemble(cls, curves: Sequence[Curve], junctions: Sequence[Sequence[Tuple[int, str]]],
                 endpoints: Sequence[Tuple[int, str]] = (), domain: Optional[ConvexDomain] = None,
                 topology: Optional[TopologyTag] = None, curve_ids: Sequence[int] = (),
                 validate: bool = True) -> "Network":
        """
        Build from curve-end references; positions are read off the curves.
        validate=False skips check_structure (auxiliary doubled networks may
        carry more than two junctions).
        """
        curves = tuple(curves)

        def node(inc: Incidence) -> Point2:
            c = curves[inc.curve]
            return Point2.of(c.nodes[inc.node_index(c)])

        js = []
        for p, refs in enumerate(junctions):
            incs = tuple(Incidence(int(c), End(e)) for c, e in refs)
            js.append(Junction(position=node(incs[0]), incident=incs, label=f"O{p + 1}"))
        eps = []
        for r, (c, e) in enumerate(endpoints):
            inc = Incidence(int(c), End(e))
            eps.append(Endpoint(position=node(inc), incident=inc, label=f"P{r + 1}"))
        net = cls(curves=curves, junctions=tuple(js), endpoints=tuple(eps), domain=domain,
                  topology=topology, curve_ids=tuple(curve_ids))
        if validate:
            net.check_structure()
        return net

    def with_curves(self, curves: Sequence[Curve]) -> "Network":
        """Same combinatorics, new curve geometry; junction/endpoint positions follow."""
        curves = tuple(curves)
        js = tuple(
            replace(j, position=Point2.of(curves[j.incident[0].curve].nodes[j.incident[0].node_index(curves[j.incident[0].curve])]))
            for j in self.junctions
        )
        eps = tuple(
            replace(e, position=Point2.of(curves[e.incident.curve].nodes[e.incident.node_index(curves[e.incident.curve])]))
            for e in self.endpoints
        )
        return replace(self, curves=curves, junctions=js, endpoints=eps)

    def with_topology(self, topology: Optional[TopologyTag]) -> "Network":
        return replace(self, topology=topology)

    def transformed(self, matrix: np.ndarray, shift: np.ndarray = np.zeros(2)) -> "Network":
        m = np.asarray(matrix, dtype=float)
        moved = self.with_curves([c.transformed(m, shift) for c in self.curves])
        domain = None if self.domain is None else self.domain.transformed(m, shift)
        return replace(moved, domain=domain)

    # -- queries ----------------------------------------------------------

    def curve_index(self, curve_id: int) -> int:
        return self.curve_ids.index(curve_id)

    def incidence_point(self, inc: Incidence) -> np.ndarray:
        c = self.curves[inc.curve]
        return c.nodes[inc.node_index(c)]

    def end_roles(self) -> Dict[Tuple[int, End], Tuple[str, int]]:
        """Map every curve end to ('junction', p) or ('endpoint', r)."""
        roles: Dict[Tuple[int, End], Tuple[str, int]] = {}
        for p, j in enumerate(self.junctions):
            for inc in j.incident:
                roles[(inc.curve, inc.end)] = ("junction", p)
        for r, e in enumerate(self.endpoints):
            roles[(e.incident.curve, e.incident.end)] = ("endpoint", r)
        return roles

    @property
    def total_length(self) -> float:
        return float(sum(c.length for c in self.curves))

    def all_nodes(self) -> np.ndarray:
        return np.vstack([c.nodes for c in self.curves])

    @property
    def diameter(self) -> float:
        return diameter(self.all_nodes())

    def closed_curve_indices(self) -> List[int]:
        """Curves starting and ending at the same junction."""
        out = []
        roles = self.end_roles()
        for i, c in enumerate(self.curves):
            if c.closed:
                continue
            a, b = roles.get((i, End.START)), roles.get((i, End.END))
            if a is not None and a == b and a[0] == "junction":
                out.append(i)
        return out

    def curve_graph(self) -> nx.MultiGraph:
        """Vertices J<p>, P<r> (and C<i> for periodic curves); one edge per curve keyed by index."""
        g = nx.MultiGraph()
        roles = self.end_roles()
        for p in range(len(self.junctions)):
            g.add_node(f"J{p}", kind="junction")
        for r in range(len(self.endpoints)):
            g.add_node(f"P{r}", kind="endpoint")
        for i, c in enumerate(self.curves):
            if c.closed:
                g.add_node(f"C{i}", kind="periodic")
                g.add_edge(f"C{i}", f"C{i}", key=i)
                continue
            ends = []
            for e in (End.START, End.END):
                role = roles.get((i, e))
                if role is None:
                    ends.append(f"F{i}{e.value[0]}")
                    g.add_node(ends[-1], kind="free")
                else:
                    ends.append(("J" if role[0] == "junction" else "P") + str(role[1]))
            g.add_edge(ends[0], ends[1], key=i)
        return g

    # -- validation -------------------------------------------------------

    def check_structure(self) -> None:
        """Combinatorial and boundary invariants; raises InvalidArgument or UnsupportedTopology."""
        if not self.curves:
            raise InvalidArgument("a network needs at least one curve")
        if len(self.junctions) > 2:
            raise UnsupportedTopology(f"{len(self.junctions)} triple junctions; at most 2 are supported")
        if len(self.endpoints) not in ENDPOINT_COUNTS[len(self.junctions)]:
            raise InvalidArgument(
                f"{len(self.endpoints)} endpoints do not fit a connected network with {len(self.junctions)} junctions"
            )
        seen = set()
        for j in self.junctions:
            if len(j.incident) != 3:
                raise InvalidArgument(f"junction {j.label} has {len(j.incident)} incidences, expected 3")
            p = np.asarray(j.position)
            for inc in j.incident:
                key = (inc.curve, inc.end)
                if key in seen:
                    raise InvalidArgument(f"curve end {key} is attached twice")
                seen.add(key)
                if self.curves[inc.curve].closed:
                    raise InvalidArgument(f"periodic curve {inc.curve} cannot meet a junction")
                if np.linalg.norm(self.incidence_point(inc) - p) > JUNCTION_TOL * max(1.0, self.diameter):
                    raise InvalidArgument(f"curve {inc.curve} does not reach junction {j.label}")
        for e in self.endpoints:
            key = (e.incident.curve, e.incident.end)
            if key in seen:
                raise InvalidArgument(f"curve end {key} is attached twice")
            seen.add(key)
        for i, c in enumerate(self.curves):
            if c.closed:
                continue
            for end in (End.START, End.END):
                if (i, end) not in seen:
                    raise InvalidArgument(f"curve {i} has a free {end.value}")
        positions = [np.asarray(e.position) for e in self.endpoints]
        for a in range(len(positions)):
            for b in range(a + 1, len(positions)):
                if np.linalg.norm(positions[a] - positions[b]) <= JUNCTION_TOL:
                    raise InvalidArgument("two endpoints coincide")
        if self.domain is not None:
            scale = max(1.0, self.diameter)
            for e in self.endpoints:
                if self.domain.distance_to_boundary(np.asarray(e.position)) > 1e-7 * scale:
                    raise InvalidArgument(f"endpoint {e.label} is not on the domain boundary")
            inside = self.domain.contains(self.all_nodes())
            on_boundary = {tuple(np.round(np.asarray(e.position), 12)) for e in self.endpoints}
            for node, ok in zip(self.all_nodes(), inside):
                if not ok and tuple(np.round(node, 12)) not in on_boundary:
                    if self.domain.distance_to_boundary(node) > 1e-7 * scale:
                        raise InvalidArgument("network leaves the domain")
        if len(positions) >= 3 and not no_three_collinear(positions):
            raise InvalidArgument("three endpoints are collinear")
        g = self.curve_graph()
        if not nx.is_connected(g):
            raise InvalidArgument("network is not connected")
