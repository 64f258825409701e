# network/presets.py
"""
Regular initial networks for every topology of the two-junction grid, plus
the junction-free and single-junction test shapes.

All presets are built from straight pieces and circular arcs whose tangents
meet at exactly 120 degrees, then resampled to the requested spacing and
Newton-projected so the discrete junction tangents balance too.
"""
import logging
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from geometry.primitives import ConvexDomain, Curve, resample_equidistant, rotate_ccw, shoelace
from network.junctions import project_junctions
from network.model import Network, TopologyTag
from utils.errors import InvalidArgument

logger = logging.getLogger(__name__)

MIN_NODES = 9
DENSE = 2000


def _direction(deg: float) -> np.ndarray:
    t = np.deg2rad(deg)
    return np.array([np.cos(t), np.sin(t)])


def arc(center: np.ndarray, radius: float, theta0: float, sweep: float, k: int = DENSE) -> np.ndarray:
    t = theta0 + sweep * np.linspace(0.0, 1.0, k)
    return np.asarray(center) + radius * np.column_stack([np.cos(t), np.sin(t)])


def arc_from(p, q, heading_deg: float, k: int = DENSE) -> np.ndarray:
    """Circular arc from p to q whose tangent at p points along heading_deg."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    d = _direction(heading_deg)
    nrm = rotate_ccw(d)
    w = p - q
    denom = 2.0 * float(nrm @ w)
    if abs(denom) < 1e-12 * max(1.0, float(w @ w)):
        return segment_points(p, q, k)
    rho = -float(w @ w) / denom
    center = p + rho * nrm
    t0 = np.arctan2(*(p - center)[::-1])
    t1 = np.arctan2(*(q - center)[::-1])
    if rho > 0:
        sweep = (t1 - t0) % (2.0 * np.pi)
    else:
        sweep = -((t0 - t1) % (2.0 * np.pi))
    pts = arc(center, abs(rho), t0, sweep, k)
    pts[0], pts[-1] = p, q
    return pts


def segment_points(p, q, k: int = DENSE) -> np.ndarray:
    s = np.linspace(0.0, 1.0, k)[:, None]
    return np.asarray(p, dtype=float) + s * (np.asarray(q, dtype=float) - np.asarray(p, dtype=float))


def join(*pieces: np.ndarray) -> np.ndarray:
    out = [pieces[0]]
    for piece in pieces[1:]:
        out.append(piece[1:])
    return np.vstack(out)


def discretize(points: np.ndarray, h: float, min_nodes: int = MIN_NODES) -> Curve:
    dense = Curve(nodes=points)
    n = max(min_nodes, int(np.ceil(dense.length / h)) + 1)
    return resample_equidistant(dense, n)


def teardrop(corner, axis_deg: float, leg: float) -> np.ndarray:
    """
    Counterclockwise loop leaving and re-entering `corner` at +-60 degrees about
    the axis direction: straight leg, tangent circular arc, straight leg.
    """
    corner = np.asarray(corner, dtype=float)
    q1 = corner + leg * _direction(axis_deg - 60.0)
    q2 = corner + leg * _direction(axis_deg + 60.0)
    return join(segment_points(corner, q1, 200), arc_from(q1, q2, axis_deg - 60.0), segment_points(q2, corner, 200))


def notched_loop(corner, leg: float, radius: float) -> np.ndarray:
    """
    Counterclockwise loop with a reflex 240 degree corner at `corner`, body to
    the left: leaves at 60 degrees and returns heading 120 degrees.
    """
    corner = np.asarray(corner, dtype=float)
    q1 = corner + leg * _direction(60.0)
    c1 = q1 + radius * _direction(150.0)
    x1 = c1 + radius * np.array([-1.0, 0.0])
    x2 = np.array([x1[0], -x1[1]])
    c2 = np.array([c1[0], -c1[1]])
    q2 = np.array([q1[0], -q1[1]])
    a1 = arc(c1, radius, np.deg2rad(-30.0), np.deg2rad(210.0))
    a2 = arc(c2, radius, np.pi, np.deg2rad(210.0))
    a1[0], a1[-1], a2[0], a2[-1] = q1, x1, x2, q2
    return join(segment_points(corner, q1, 200), a1, segment_points(x1, x2, 400), a2, segment_points(q2, corner, 200))


def _ray_to_circle(origin: np.ndarray, heading_deg: float, radius: float) -> np.ndarray:
    d = _direction(heading_deg)
    b = float(origin @ d)
    c = float(origin @ origin) - radius ** 2
    t = -b + np.sqrt(b * b - c)
    return origin + t * d


def _finish(curves: List[Curve], junctions, endpoints, domain, topology) -> Network:
    net = Network.assemble(curves, junctions, endpoints, domain=domain, topology=topology)
    return project_junctions(net)


def _scaled(points: List[np.ndarray], factor: float) -> List[np.ndarray]:
    return [p * factor for p in points]


# ---------------------------------------------------------------------------
# Junction-free and single-junction shapes
# ---------------------------------------------------------------------------

def circle(radius: float = 1.0, n: int = 256, center=(0.0, 0.0)) -> Network:
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    nodes = np.asarray(center) + radius * np.column_stack([np.cos(t), np.sin(t)])
    return Network(curves=(Curve(nodes=nodes, closed=True),))


def segment(half_length: float = 1.0, n: int = 20) -> Network:
    p, q = np.array([-half_length, 0.0]), np.array([half_length, 0.0])
    domain = ConvexDomain.disk(radius=half_length, anchors=[p, q])
    curve = Curve(nodes=segment_points(p, q, n))
    return Network.assemble([curve], [], [(0, "start"), (0, "end")], domain=domain)


def triod(radius: float = 1.0, h: float = 0.05, rotation_deg: float = 90.0) -> Network:
    """Steiner triod: three straight segments at 120 degrees to a disk boundary."""
    center = np.zeros(2)
    tips = [radius * _direction(rotation_deg + 120.0 * k) for k in range(3)]
    domain = ConvexDomain.disk(radius=radius, anchors=tips)
    curves = [discretize(segment_points(center, tip), h) for tip in tips]
    return Network.assemble(curves, [[(0, "start"), (1, "start"), (2, "start")]],
                            [(0, "end"), (1, "end"), (2, "end")], domain=domain)


# ---------------------------------------------------------------------------
# Two-junction topologies
# ---------------------------------------------------------------------------

def lens(half_width: Optional[float] = None, area: Optional[float] = None, domain_radius: float = 1.0,
         offset: float = 0.0, h: float = 0.02) -> Network:
    """
    Two circular arcs of 120 degrees between junctions (+-a, 0) and straight
    legs along the axis to endpoints (+-R, 0).
    """
    if area is not None:
        half_width = float(np.sqrt(area / ((4.0 / 3.0) * (2.0 * np.pi / 3.0 - np.sqrt(3.0) / 2.0))))
    a = 0.3 if half_width is None else float(half_width)
    if domain_radius <= a + abs(offset):
        raise InvalidArgument(
            f"lens endpoints {2 * domain_radius:.6g} apart are closer than the loop diameter {2 * a:.6g}"
        )
    o1, o2 = np.array([offset - a, 0.0]), np.array([offset + a, 0.0])
    p1, p2 = np.array([-domain_radius, 0.0]), np.array([domain_radius, 0.0])
    domain = ConvexDomain.disk(radius=domain_radius, anchors=[p1, p2])
    pieces = [arc_from(o1, o2, 60.0), arc_from(o1, o2, -60.0), segment_points(o1, p1), segment_points(o2, p2)]
    curves = [discretize(p, h) for p in pieces]
    return _finish(curves,
                   [[(0, "start"), (1, "start"), (2, "start")], [(0, "end"), (1, "end"), (3, "start")]],
                   [(2, "end"), (3, "end")], domain, TopologyTag.LENS)


def tree(half_length: float = 0.25, endpoint_angles: Sequence[float] = (150.0, 210.0, 30.0, 330.0),
         domain_radius: float = 1.0, jitter_deg: float = 0.0, seed: Optional[int] = None,
         h: float = 0.02) -> Network:
    """
    Internal straight curve between (-b, 0) and (b, 0); the first two endpoint
    angles attach to the left junction, the last two to the right one.
    """
    angles = np.asarray(endpoint_angles, dtype=float)
    if jitter_deg > 0.0:
        angles = angles + np.random.default_rng(seed).normal(0.0, jitter_deg, size=4)
    o1, o2 = np.array([-half_length, 0.0]), np.array([half_length, 0.0])
    tips = [domain_radius * _direction(t) for t in angles]
    domain = ConvexDomain.disk(radius=domain_radius, anchors=tips)
    pieces = [
        segment_points(o1, o2),
        arc_from(o1, tips[0], 120.0),
        arc_from(o1, tips[1], 240.0),
        arc_from(o2, tips[2], 60.0),
        arc_from(o2, tips[3], -60.0),
    ]
    curves = [discretize(p, h) for p in pieces]
    return _finish(curves,
                   [[(0, "start"), (1, "start"), (2, "start")], [(0, "end"), (3, "start"), (4, "start")]],
                   [(1, "end"), (2, "end"), (3, "end"), (4, "end")], domain, TopologyTag.TREE)


def collapsing_tree(**kwargs) -> Network:
    """Endpoints paired left/right although the short Steiner pairing is top/bottom."""
    kwargs.setdefault("endpoint_angles", (115.0, 245.0, 65.0, 295.0))
    return tree(**kwargs)


def island(area: float = 0.2, connector: float = 0.3, domain_radius: float = 1.0,
           h: float = 0.02) -> Network:
    unit_loop = teardrop(np.zeros(2), 180.0, 1.0)
    leg = float(np.sqrt(area / abs(shoelace(unit_loop[:-1]))))
    o1 = np.array([-0.5 * connector, 0.0])
    o2 = np.array([0.5 * connector, 0.0])
    tips = [_ray_to_circle(o2, 60.0, domain_radius), _ray_to_circle(o2, -60.0, domain_radius)]
    if np.linalg.norm(o1) + 3.8 * leg >= domain_radius:
        raise InvalidArgument(f"island loop of area {area} does not fit in a domain of radius {domain_radius}")
    domain = ConvexDomain.disk(radius=domain_radius, anchors=tips)
    pieces = [teardrop(o1, 180.0, leg), segment_points(o1, o2), segment_points(o2, tips[0]), segment_points(o2, tips[1])]
    curves = [discretize(p, h) for p in pieces]
    return _finish(curves,
                   [[(0, "start"), (0, "end"), (1, "start")], [(1, "end"), (2, "start"), (3, "start")]],
                   [(2, "end"), (3, "end")], domain, TopologyTag.ISLAND)


def _theta_pieces(half_height: float, skew_deg: float) -> List[np.ndarray]:
    top, bottom = np.array([0.0, half_height]), np.array([0.0, -half_height])
    headings = (-90.0 + skew_deg, 30.0 + skew_deg, 150.0 + skew_deg)
    return [arc_from(top, bottom, hd) for hd in headings]


def theta(area: float = 1.0, skew_deg: float = 0.0, h: float = 0.02) -> Network:
    """
    Three arcs between (0, a) and (0, -a) with centers on the x axis; skew 0
    gives a straight middle curve and two cells of equal area.
    The mean cell area is scaled to `area`.
    """
    middle, right, left = _theta_pieces(1.0, skew_deg)
    cells = [abs(shoelace(join(middle, side[::-1])[:-1])) for side in (right, left)]
    factor = float(np.sqrt(area / np.mean(cells)))
    curves = [discretize(p, h) for p in _theta_pieces(factor, skew_deg)]
    return _finish(curves,
                   [[(0, "start"), (1, "start"), (2, "start")], [(0, "end"), (1, "end"), (2, "end")]],
                   [], None, TopologyTag.THETA)


def eyeglasses_a(area: float = 0.3, connector: float = 0.4, right_scale: float = 1.0,
                 h: float = 0.02) -> Network:
    unit_loop = teardrop(np.zeros(2), 180.0, 1.0)
    leg = float(np.sqrt(area / abs(shoelace(unit_loop[:-1]))))
    o1, o2 = np.array([-0.5 * connector, 0.0]), np.array([0.5 * connector, 0.0])
    pieces = [teardrop(o1, 180.0, leg), segment_points(o1, o2), teardrop(o2, 0.0, leg * right_scale)]
    curves = [discretize(p, h) for p in pieces]
    return _finish(curves,
                   [[(0, "start"), (0, "end"), (1, "start")], [(1, "end"), (2, "start"), (2, "end")]],
                   [], None, TopologyTag.EYEGLASSES_A)


def eyeglasses_b(outer_area: float = 1.0, inner_leg: float = 0.3, gap: float = 0.6,
                 h: float = 0.02) -> Network:
    """Inner teardrop at O1 nested inside a notched outer loop at O2 (reflex corner)."""
    outer = notched_loop(np.zeros(2), 1.0, 1.5)
    factor = float(np.sqrt(outer_area / abs(shoelace(outer[:-1]))))
    o1, o2 = np.array([-gap, 0.0]), np.zeros(2)
    pieces = _scaled([teardrop(o1, 180.0, inner_leg), segment_points(o1, o2), outer], factor)
    curves = [discretize(p, h) for p in pieces]
    return _finish(curves,
                   [[(0, "start"), (0, "end"), (1, "start")], [(1, "end"), (2, "start"), (2, "end")]],
                   [], None, TopologyTag.EYEGLASSES_B)


PRESETS: Dict[str, Callable[..., Network]] = {
    "circle": circle,
    "segment": segment,
    "triod": triod,
    "tree": tree,
    "collapsing_tree": collapsing_tree,
    "lens": lens,
    "island": island,
    "theta": theta,
    "eyeglassesA": eyeglasses_a,
    "eyeglassesB": eyeglasses_b,
}


def build_preset(name: str, **params) -> Network:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise InvalidArgument(f"unknown preset '{name}'; choose one of {sorted(PRESETS)}") from None
    logger.debug("building preset %s with %s", name, params)
    return factory(**params)
