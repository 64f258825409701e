# singularity/transition.py
"""
Topology changes at singular times.

A collapsing internal curve leaves four branches meeting at a point in the
120/60 pattern; the flow restarts from the same four branches paired the
other way, joined by a short self-expanding germ. A collapsing lens or
theta cell whose blow-up is not a spoon is continued by excising the cell.
Boundary collapses are reported but not restarted.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from atlas.expander import REFERENCE_RAYS, expander_germ, pattern_rotation, solve_symmetric_germ
from diagnostics.embeddedness import check_embedded
from geometry.primitives import Curve, Point2, angle_between, end_tangent, resample_equidistant, rotation, unit
from network.junctions import project_junctions
from network.model import End, Incidence, Network, TopologyTag
from network.topology import DEFAULT_ANGLE_TOL, tag_or_none, validate_regular
from singularity.detect import DegenerateCore, SingularEvent
from utils.errors import (ContinuationUnsupported, DegenerateCurve, InvalidArgument, JunctionSolveFailed,
                          NotEmbedded, TransitionRefused, UnsupportedTopology)

logger = logging.getLogger(__name__)

PATTERN_CHECK_TOL = np.deg2rad(10.0)
SPOON = "BrakkeSpoon"

ALLOWED = frozenset({
    (TopologyTag.TREE, TopologyTag.TREE),
    (TopologyTag.LENS, TopologyTag.ISLAND),
    (TopologyTag.ISLAND, TopologyTag.LENS),
    (TopologyTag.THETA, TopologyTag.EYEGLASSES_A),
    (TopologyTag.THETA, TopologyTag.EYEGLASSES_B),
    (TopologyTag.EYEGLASSES_A, TopologyTag.THETA),
    (TopologyTag.EYEGLASSES_B, TopologyTag.THETA),
})

# germ curve carrying each reference ray (60, 120, 240, 300 degrees)
_GERM_ARM = {0: 1, 1: 2, 2: 4, 3: 3}


@dataclass
class TransitionRecord:
    kind: str  # standard | continuation
    t: float
    pre: Optional[TopologyTag]
    post: Optional[TopologyTag]
    pivot: Point2
    removed: Tuple[int, ...]
    inserted: Tuple[int, ...] = ()
    delta: float = float("nan")
    germ_residual: float = float("nan")
    join_angle_deg: float = float("nan")
    core: Optional[DegenerateCore] = None


@dataclass
class BoundaryLimit:
    """Curve collapse onto a fixed endpoint: two curves meet there at a 2-point."""
    t: float
    endpoint: str
    position: Point2
    two_point_angle_deg: float
    removed: Tuple[int, ...]
    restart_supported: bool = False
    network: Optional[Network] = field(default=None, repr=False)


def _resampled(nodes: np.ndarray, h: float, closed: bool = False) -> Curve:
    keep = np.concatenate([[True], np.linalg.norm(np.diff(nodes, axis=0), axis=1) > 1e-12])
    curve = Curve(nodes=nodes[keep], closed=closed)
    return resample_equidistant(curve, max(9, int(round(curve.length / h)) + 1))


def _drop_within(nodes: np.ndarray, pivot: np.ndarray, radius: float, leading: bool) -> np.ndarray:
    d = np.linalg.norm(nodes - pivot, axis=1)
    outside = d > radius
    if not np.any(outside):
        raise TransitionRefused(f"branch lies inside the splice radius {radius:.3e}")
    if leading:
        return nodes[int(np.argmax(outside)):]
    return nodes[: len(nodes) - int(np.argmax(outside[::-1]))]


def _internal_ends(network: Network, curve_index: int) -> Tuple[int, int]:
    roles = network.end_roles()
    a, b = roles.get((curve_index, End.START)), roles.get((curve_index, End.END))
    if not (a and b and a[0] == b[0] == "junction" and a[1] != b[1]):
        raise TransitionRefused(f"curve {curve_index} does not join two distinct junctions")
    return a[1], b[1]


def standard_transition(network: Network, curve_index: int, delta: float, h: float,
                        t: float = 0.0, core: Optional[DegenerateCore] = None) -> Tuple[Network, TransitionRecord]:
    """
    Replace the collapsed curve by an expander germ whose middle curve has
    length delta. The four outer branches are cut at distance delta from the
    pivot, continued by the germ arms, and resampled to spacing h.
    """
    pa, pb = _internal_ends(network, curve_index)
    pivot = 0.5 * (np.asarray(network.junctions[pa].position) + np.asarray(network.junctions[pb].position))
    branches: List[Incidence] = [inc for p in (pa, pb) for inc in network.junctions[p].incident if inc.curve != curve_index]
    if len(branches) != 4:
        raise TransitionRefused(f"collapse of curve {curve_index} leaves {len(branches)} branches, expected 4")
    directions = np.array([end_tangent(network.curves[i.curve].nodes, i.end is End.START) for i in branches])
    try:
        offset, order = pattern_rotation(directions, tol=PATTERN_CHECK_TOL)
    except InvalidArgument as exc:
        raise TransitionRefused(f"four-point is not in the 120/60 pattern: {exc}") from exc

    angles = np.mod(np.arctan2(directions[:, 1], directions[:, 0]), 2.0 * np.pi)
    slot_of: Dict[int, int] = {}
    for slot, a in enumerate(order):
        k = int(np.argmin(np.abs(np.angle(np.exp(1j * (angles - a))))))
        slot_of[k] = slot
    if len(slot_of) != 4:
        raise TransitionRefused("branch directions are not distinct")

    rays = [rotation(offset) @ np.array([np.cos(r), np.sin(r)]) for r in REFERENCE_RAYS]
    germ = expander_germ(rays, scale=delta / (2.0 * solve_symmetric_germ()[0]))
    arms = {slot: germ.network.curves[_GERM_ARM[slot]].nodes + pivot for slot in range(4)}
    radius = delta

    spliced: Dict[int, np.ndarray] = {}
    for k, inc in enumerate(branches):
        arm = arms[slot_of[k]]
        arm = arm[np.linalg.norm(arm - pivot, axis=1) <= radius]
        nodes = spliced.get(inc.curve, network.curves[inc.curve].nodes)
        if inc.end is End.START:
            spliced[inc.curve] = np.vstack([arm, _drop_within(nodes, pivot, radius, leading=True)])
        else:
            spliced[inc.curve] = np.vstack([_drop_within(nodes, pivot, radius, leading=False), arm[::-1]])

    curves = list(network.curves)
    try:
        for i, nodes in spliced.items():
            curves[i] = _resampled(nodes, h)
        curves[curve_index] = _resampled(germ.network.curves[0].nodes + pivot, h)
    except DegenerateCurve as exc:
        raise TransitionRefused(f"splice produced a degenerate curve: {exc}") from exc

    new_id = max(network.curve_ids) + 1
    ids = list(network.curve_ids)
    ids[curve_index] = new_id
    top = [(curve_index, "start")] + [(branches[k].curve, branches[k].end.value) for k in sorted(slot_of, key=slot_of.get)[:2]]
    bottom = [(curve_index, "end")] + [(branches[k].curve, branches[k].end.value) for k in sorted(slot_of, key=slot_of.get)[2:]]
    endpoints = [(e.incident.curve, e.incident.end.value) for e in network.endpoints]
    try:
        net = Network.assemble(curves, [top, bottom], endpoints, domain=network.domain, curve_ids=ids)
        net = project_junctions(net)
        check_embedded(net)
    except (InvalidArgument, UnsupportedTopology, JunctionSolveFailed, NotEmbedded) as exc:
        raise TransitionRefused(f"restarted network is not admissible: {exc}") from exc
    report = validate_regular(net, DEFAULT_ANGLE_TOL)
    if not report.passed:
        raise TransitionRefused(f"restarted network misses the Herring condition by {report.max_deviation_deg:.3f} degrees")

    pre = network.topology or tag_or_none(network)
    post = tag_or_none(net)
    if pre is not None and post is not None and (pre, post) not in ALLOWED:
        raise TransitionRefused(f"{pre.value} -> {post.value} is not a standard transition")
    net = net.with_topology(post)
    logger.info("standard transition %s -> %s at t=%.9g, pivot (%.6g, %.6g)",
                getattr(pre, "value", None), getattr(post, "value", None), t, *pivot)
    record = TransitionRecord(kind="standard", t=t, pre=pre, post=post, pivot=Point2.of(pivot),
                              removed=(network.curve_ids[curve_index],), inserted=(new_id,), delta=delta,
                              germ_residual=germ.residual, core=core)
    return net, record


def _rebuild(network: Network, replaced: Dict[int, Optional[Curve]],
             remap: Dict[Tuple[int, End], Tuple[int, End]], drop_junctions=(), drop_endpoints=(),
             validate: bool = True) -> Network:
    """New network with curves replaced or removed (None) and curve ends re-attached through `remap`."""
    keep = [i for i in range(len(network.curves)) if replaced.get(i, network.curves[i]) is not None]
    index = {old: new for new, old in enumerate(keep)}
    curves = [replaced.get(i, network.curves[i]) for i in keep]

    def ref(inc: Incidence) -> Tuple[int, str]:
        c, e = remap.get((inc.curve, inc.end), (inc.curve, inc.end))
        return index[c], e.value

    junctions = [[ref(i) for i in j.incident] for p, j in enumerate(network.junctions) if p not in drop_junctions]
    endpoints = [ref(e.incident) for r, e in enumerate(network.endpoints) if r not in drop_endpoints]
    return Network.assemble(curves, junctions, endpoints, domain=network.domain,
                            curve_ids=[network.curve_ids[i] for i in keep], validate=validate)


def _oriented(network: Network, inc: Incidence, ending_at: bool) -> np.ndarray:
    """Nodes of the incident curve ordered to end (or start) at the incidence."""
    nodes = network.curves[inc.curve].nodes
    at_end = inc.end is End.END
    return nodes if at_end == ending_at else nodes[::-1]


def _far(inc: Incidence) -> End:
    return End.START if inc.end is End.END else End.END


def _limit_direction(nodes: np.ndarray, P: np.ndarray, radius: float) -> np.ndarray:
    """Direction, away from P, of the first segment that starts at least `radius` from P."""
    d = np.linalg.norm(nodes - P, axis=1)
    beyond = np.nonzero(d[:-1] >= radius)[0]
    k = int(beyond[0]) if len(beyond) else len(nodes) - 2
    return unit(nodes[k + 1] - nodes[k])


def boundary_transition(network: Network, curve_index: int, t: float = 0.0) -> BoundaryLimit:
    """
    Describe the limit of a curve collapsing onto its endpoint. The two other
    curves of the junction reach the endpoint; their 2-point angle is read off
    the branches outside twice the collapsing length, where the junction no
    longer bends them.
    """
    roles = network.end_roles()
    ends = {e: roles.get((curve_index, e)) for e in (End.START, End.END)}
    junction = [r[1] for r in ends.values() if r and r[0] == "junction"]
    endpoint = [r[1] for r in ends.values() if r and r[0] == "endpoint"]
    if len(junction) != 1 or len(endpoint) != 1:
        raise InvalidArgument(f"curve {curve_index} does not join a junction to an endpoint")
    p, r = junction[0], endpoint[0]
    P = np.asarray(network.endpoints[r].position)
    a, b = [inc for inc in network.junctions[p].incident if inc.curve != curve_index]
    radius = 2.0 * network.curves[curve_index].length
    ua = _limit_direction(_oriented(network, a, ending_at=False), P, radius)
    ub = _limit_direction(_oriented(network, b, ending_at=False), P, radius)
    angle = float(np.rad2deg(angle_between(ua, ub)))

    limit = None
    try:
        na = _oriented(network, a, ending_at=True).copy()
        nb = _oriented(network, b, ending_at=False).copy()
        na[-1] = P
        nb[0] = P
        if a.curve == b.curve:
            merged = Curve(nodes=na[:-1], closed=True)
            remap: Dict[Tuple[int, End], Tuple[int, End]] = {}
            replaced: Dict[int, Optional[Curve]] = {curve_index: None, a.curve: merged}
        else:
            merged = Curve(nodes=np.vstack([na, nb[1:]]))
            remap = {(a.curve, _far(a)): (a.curve, End.START), (b.curve, _far(b)): (a.curve, End.END)}
            replaced = {curve_index: None, a.curve: merged, b.curve: None}
        limit = _rebuild(network, replaced, remap, drop_junctions={p}, drop_endpoints={r}, validate=False)
    except (DegenerateCurve, InvalidArgument) as exc:
        logger.warning("no limit network for the collapse onto %s: %s", network.endpoints[r].label, exc)

    logger.info("curve %d collapses onto endpoint %s at t=%.9g; 2-point angle %.3f degrees",
                curve_index, network.endpoints[r].label, t, angle)
    return BoundaryLimit(t=t, endpoint=network.endpoints[r].label, position=Point2.of(P), two_point_angle_deg=angle,
                         removed=(network.curve_ids[curve_index],), network=limit)


def region_collapse_continuation(network: Network, event: SingularEvent, blowup_class: Optional[str],
                                 h: float, core: Optional[DegenerateCore] = None) -> Tuple[Network, TransitionRecord]:
    """
    Excise a vanished cell bounded by two curves between the junctions and
    join what the two junctions still carry through the collapse point: two
    different curves become one curve, the two ends of one curve close it up.
    """
    if blowup_class == SPOON:
        raise ContinuationUnsupported("the cell collapses like a spoon; no continuation is defined")
    loop = tuple(event.loop)
    if len(loop) != 2:
        raise ContinuationUnsupported(f"cell bounded by {len(loop)} curve(s) has no continuation")
    c1, c2 = loop
    p, q = _internal_ends(network, c1)
    if set(_internal_ends(network, c2)) != {p, q}:
        raise ContinuationUnsupported("the cell curves do not share their junctions")
    (op,) = [inc for inc in network.junctions[p].incident if inc.curve not in loop]
    (oq,) = [inc for inc in network.junctions[q].incident if inc.curve not in loop]
    X = np.asarray(event.location)

    if op.curve == oq.curve:
        nodes = _oriented(network, op, ending_at=False)
        ring = np.vstack([[X], nodes[1:-1]])
        incoming, outgoing = X - ring[-1], ring[1] - X
        merged = _resampled(ring, h, closed=True)
        replaced: Dict[int, Optional[Curve]] = {c1: None, c2: None, op.curve: merged}
        remap: Dict[Tuple[int, End], Tuple[int, End]] = {}
    else:
        A = _oriented(network, op, ending_at=True)
        B = _oriented(network, oq, ending_at=False)
        incoming, outgoing = X - A[-2], B[1] - X
        merged = _resampled(np.vstack([A[:-1], [X], B[1:]]), h)
        replaced = {c1: None, c2: None, op.curve: merged, oq.curve: None}
        remap = {(op.curve, _far(op)): (op.curve, End.START), (oq.curve, _far(oq)): (op.curve, End.END)}
    try:
        net = _rebuild(network, replaced, remap, drop_junctions={p, q})
    except (InvalidArgument, UnsupportedTopology) as exc:
        raise ContinuationUnsupported(f"continued network is not admissible: {exc}") from exc

    join = float(np.rad2deg(angle_between(incoming, outgoing)))
    pre = network.topology or tag_or_none(network)
    post = tag_or_none(net)
    net = net.with_topology(post)
    logger.info("cell %s vanished at t=%.9g; continued with join angle %.3f degrees", loop, event.t, join)
    record = TransitionRecord(kind="continuation", t=event.t, pre=pre, post=post, pivot=Point2.of(X),
                              removed=tuple(network.curve_ids[i] for i in loop), join_angle_deg=join, core=core)
    return net, record
