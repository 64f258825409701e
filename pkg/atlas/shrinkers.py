# atlas/shrinkers.py
"""
Catalog of complete embedded regular shrinkers with at most two triple
junctions, plus the two degenerate four/two-halfline configurations.

Curved profiles are found by shooting: arcs of the shrinker ODE leave a
junction at 120 degrees to a halfline lying on a line through the origin and
must cross a symmetry axis perpendicularly; the other half follows by
reflection. Unbounded curves are truncated at R_TRUNC.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, root

from atlas.ode import SHRINKER, CurveState, self_similar_rhs, shrinker_curve_ode_step
from diagnostics.embeddedness import check_embedded
from geometry.primitives import Curve, hausdorff_polylines, rotation
from network.model import Network
from utils.config import load_config
from utils.errors import NotEmbedded, SolverFailed, StepRejected

logger = logging.getLogger(__name__)

R_TRUNC = load_config()["ATLAS_R_TRUNC"]
ARC_DS = 0.02
RAY_DS = 0.05
MAX_ARC = 60.0
ODE_TOL = 1e-13
SHOOT_TOL = 1e-10
CERTIFY_TOL = 1e-6
TWO_THIRDS_PI = 2.0 * np.pi / 3.0

PROFILE_NAMES = (
    "Line", "Halfline", "Circle", "StandardTriod", "BrakkeSpoon",
    "StandardLens", "Fish", "FourHalflines", "TwoHalflines120",
)


def _wrap(angle: float) -> float:
    return float((angle + np.pi) % (2.0 * np.pi) - np.pi)


def _direction(angle: float) -> np.ndarray:
    return np.array([np.cos(angle), np.sin(angle)])


# ---------------------------------------------------------------------------
# Arcs
# ---------------------------------------------------------------------------

@dataclass
class Arc:
    states: np.ndarray = field(repr=False)  # (k, 3): x, y, theta
    s: np.ndarray = field(repr=False)  # uniform arclength grid

    @property
    def length(self) -> float:
        return float(self.s[-1])

    @property
    def table(self) -> np.ndarray:
        """Columns s, x, y, theta."""
        return np.column_stack([self.s, self.states])

    @property
    def nodes(self) -> np.ndarray:
        return self.states[:, :2]

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]


def integrate_arc(start, heading: float, axis: str, direction: float = -1.0, sign: float = SHRINKER,
                  max_length: float = MAX_ARC, ds: float = ARC_DS) -> Optional[Arc]:
    """
    Integrate from `start` with the given heading until the curve crosses the
    coordinate axis ("x": y = 0, "y": x = 0) moving in `direction`. None when
    the arc escapes, spirals or never reaches the axis.
    """
    component = 1 if axis == "x" else 0
    y0 = np.array([start[0], start[1], heading], dtype=float)

    def hit(s, y):
        return y[component]
    hit.terminal = True
    hit.direction = direction

    def escape(s, y):
        return (4.0 * R_TRUNC) ** 2 - y[0] ** 2 - y[1] ** 2
    escape.terminal = True

    def spiral(s, y):
        return 4.0 * np.pi - abs(y[2] - heading)
    spiral.terminal = True

    sol = solve_ivp(lambda s, y: self_similar_rhs(s, y, sign), (0.0, max_length), y0, method="DOP853",
                    rtol=ODE_TOL, atol=ODE_TOL, events=[hit, escape, spiral], dense_output=True)
    if not len(sol.t_events[0]):
        return None
    s_end = float(sol.t_events[0][0])
    if s_end <= 0.0:
        return None
    k = max(9, int(np.ceil(s_end / ds)) + 1)
    grid = np.linspace(0.0, s_end, k)
    states = sol.sol(grid).T
    states[-1] = sol.y_events[0][0]
    states[-1, component] = 0.0
    return Arc(states=states, s=grid)


def _mirror_x(points: np.ndarray) -> np.ndarray:
    return points * np.array([1.0, -1.0])


def _mirror_y(points: np.ndarray) -> np.ndarray:
    return points * np.array([-1.0, 1.0])


def _ray(start: np.ndarray, stop: np.ndarray, ds: float = RAY_DS) -> np.ndarray:
    n = max(9, int(np.ceil(np.linalg.norm(stop - start) / ds)) + 1)
    return np.linspace(start, stop, n)


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------

def scan_roots(f: Callable[[float], float], lo: float, hi: float, samples: int) -> Tuple[np.ndarray, np.ndarray, List[Tuple[float, float]]]:
    """
    Sample f and return the brackets of genuine sign changes: both neighbours
    finite and within pi/2 of zero, so wrap-around jumps are not counted.
    """
    xs = np.linspace(lo, hi, samples)
    vals = np.array([f(x) for x in xs])
    brackets = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if not (np.isfinite(fa) and np.isfinite(fb)):
            continue
        if abs(fa) > np.pi / 2 or abs(fb) > np.pi / 2:
            continue
        if fa == 0.0 or fa * fb < 0.0:
            brackets.append((float(a), float(b)))
    return xs, vals, brackets


def _solve_1d(f: Callable[[float], float], lo: float, hi: float, samples: int, label: str) -> float:
    _, _, brackets = scan_roots(f, lo, hi, samples)
    if not brackets:
        raise SolverFailed(f"{label}: no shooting bracket in [{lo}, {hi}]", params={"lo": lo, "hi": hi, "samples": samples})
    a, b = brackets[0]
    x = brentq(f, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    residual = f(x)
    if not abs(residual) <= SHOOT_TOL:
        raise SolverFailed(f"{label}: shooting residual {residual:.3e} above {SHOOT_TOL:.0e}", params={"x": x})
    logger.debug("%s: root %.15g residual %.2e", label, x, residual)
    return float(x)


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------

@dataclass
class ShrinkerProfile:
    name: str
    network: Network
    symmetry_axes: int
    parameters: Dict[str, float] = field(default_factory=dict)
    rays: Tuple[Tuple[float, float], ...] = ()  # unit directions of the truncated unbounded curves
    arcs: List[np.ndarray] = field(default_factory=list, repr=False)  # (k, 4) tables s, x, y, theta per curve piece
    residual: float = 0.0
    junction_defect: float = 0.0
    degenerate: bool = False

    @property
    def certified(self) -> bool:
        return self.degenerate or (self.residual < CERTIFY_TOL and self.junction_defect < CERTIFY_TOL)


def ode_certificate(arcs: Sequence[np.ndarray], sign: float = SHRINKER) -> float:
    """Largest gap between a stored node and one ODE step from its predecessor."""
    worst = 0.0
    for table in arcs:
        steps = np.diff(table[:, 0])
        states = table[:, 1:]
        for j in range(len(states) - 1):
            try:
                nxt = shrinker_curve_ode_step(CurveState(*states[j]), steps[j], tol=CERTIFY_TOL, sign=sign)
            except StepRejected as e:
                return max(worst, e.error_estimate)
            gap = np.abs(np.asarray(nxt) - states[j + 1])
            gap[2] = abs(_wrap(gap[2]))
            worst = max(worst, float(gap.max()))
    return worst


def _ray_states(start: np.ndarray, angle: float) -> np.ndarray:
    """Table s, x, y, theta of a straight ray from start out to R_TRUNC."""
    nodes = _ray(start, R_TRUNC * _direction(angle))
    s = np.linalg.norm(nodes - nodes[0], axis=1)
    return np.column_stack([s, nodes, np.full(len(nodes), angle)])


def reflection_mismatch(profile: ShrinkerProfile, axis_deg: float) -> float:
    """Hausdorff distance between the profile and its mirror image across a line through 0."""
    a = np.deg2rad(axis_deg)
    u = _direction(a)
    reflect = 2.0 * np.outer(u, u) - np.eye(2)
    pts = profile.network.all_nodes()
    return hausdorff_polylines(pts, pts @ reflect.T)


def line() -> ShrinkerProfile:
    arc = _ray_states(np.array([-R_TRUNC, 0.0]), 0.0)
    net = Network.assemble([Curve(nodes=arc[:, 1:3])], [], [(0, "start"), (0, "end")], validate=False)
    return ShrinkerProfile("Line", net, symmetry_axes=2, rays=((1.0, 0.0), (-1.0, 0.0)), arcs=[arc])


def halfline() -> ShrinkerProfile:
    arc = _ray_states(np.zeros(2), 0.0)
    net = Network.assemble([Curve(nodes=arc[:, 1:3])], [], [(0, "start"), (0, "end")], validate=False)
    return ShrinkerProfile("Halfline", net, symmetry_axes=1, rays=((1.0, 0.0),), arcs=[arc])


def unit_circle(n: int = 512) -> ShrinkerProfile:
    s = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    net = Network(curves=(Curve(nodes=np.column_stack([np.cos(s), np.sin(s)]), closed=True),))
    arc = np.column_stack([s, np.cos(s), np.sin(s), s + np.pi / 2])
    return ShrinkerProfile("Circle", net, symmetry_axes=0, parameters={"radius": 1.0}, arcs=[arc])


def standard_triod() -> ShrinkerProfile:
    angles = [np.pi / 2, np.pi / 2 + TWO_THIRDS_PI, np.pi / 2 + 2 * TWO_THIRDS_PI]
    arcs = [_ray_states(np.zeros(2), a) for a in angles]
    net = Network.assemble([Curve(nodes=a[:, 1:3]) for a in arcs], [[(0, "start"), (1, "start"), (2, "start")]],
                           [(0, "end"), (1, "end"), (2, "end")], validate=False)
    return ShrinkerProfile("StandardTriod", net, symmetry_axes=3,
                           rays=tuple(tuple(_direction(a)) for a in angles), arcs=arcs)


def _lens_residual(a: float) -> float:
    arc = integrate_arc((a, 0.0), TWO_THIRDS_PI, axis="y", direction=-1.0)
    if arc is None or np.any(arc.nodes[1:, 1] <= 0.0):
        return np.nan
    return _wrap(arc.end[2] - np.pi)


def solve_lens(lo: float = 0.05, hi: float = 3.0, samples: int = 60) -> ShrinkerProfile:
    """Junctions at (+-a, 0), halflines along the x-axis, arcs crossing the y-axis perpendicularly."""
    a = _solve_1d(_lens_residual, lo, hi, samples, "lens")
    half = integrate_arc((a, 0.0), TWO_THIRDS_PI, axis="y", direction=-1.0)
    upper = np.vstack([half.nodes, _mirror_y(half.nodes)[::-1][1:]])
    lower = _mirror_x(upper)
    right = _ray(np.array([a, 0.0]), np.array([R_TRUNC, 0.0]))
    left = _ray(np.array([-a, 0.0]), np.array([-R_TRUNC, 0.0]))
    net = Network.assemble(
        [Curve(nodes=upper), Curve(nodes=lower), Curve(nodes=right), Curve(nodes=left)],
        [[(0, "start"), (1, "start"), (2, "start")], [(0, "end"), (1, "end"), (3, "start")]],
        [(2, "end"), (3, "end")],
        validate=False,
    )
    mirrored = half.table
    mirrored[:, 2:] *= -1.0
    arcs = [half.table, mirrored, _ray_states(np.array([a, 0.0]), 0.0)]
    profile = ShrinkerProfile("StandardLens", net, symmetry_axes=2, parameters={"a": a},
                              rays=((1.0, 0.0), (-1.0, 0.0)), arcs=arcs,
                              junction_defect=abs(_lens_residual(a)))
    profile.residual = ode_certificate(arcs)
    return profile


def _spoon_residual(p: float) -> float:
    arc = integrate_arc((p, 0.0), TWO_THIRDS_PI, axis="x", direction=-1.0)
    if arc is None or arc.end[0] >= p:
        return np.nan
    return _wrap(arc.end[2] - 1.5 * np.pi)


def solve_spoon(lo: float = 0.05, hi: float = 3.0, samples: int = 60) -> ShrinkerProfile:
    """Junction at (p, 0) with the halfline along +x; the loop closes symmetrically across the x-axis."""
    p = _solve_1d(_spoon_residual, lo, hi, samples, "spoon")
    half = integrate_arc((p, 0.0), TWO_THIRDS_PI, axis="x", direction=-1.0)
    loop = np.vstack([half.nodes, _mirror_x(half.nodes)[::-1][1:]])
    tail = _ray(np.array([p, 0.0]), np.array([R_TRUNC, 0.0]))
    net = Network.assemble([Curve(nodes=loop), Curve(nodes=tail)],
                           [[(0, "start"), (0, "end"), (1, "start")]], [(1, "end")], validate=False)
    arcs = [half.table, _ray_states(np.array([p, 0.0]), 0.0)]
    profile = ShrinkerProfile("BrakkeSpoon", net, symmetry_axes=1, parameters={"p": p}, rays=((1.0, 0.0),),
                              arcs=arcs, junction_defect=abs(_spoon_residual(p)))
    profile.residual = ode_certificate(arcs)
    return profile


def _fish_arcs(r: float, phi: float) -> Tuple[Optional[Arc], Optional[Arc]]:
    junction = r * _direction(phi)
    short = integrate_arc(junction, phi - TWO_THIRDS_PI, axis="x", direction=-1.0)
    long = integrate_arc(junction, phi + TWO_THIRDS_PI, axis="x", direction=-1.0)
    return short, long


def _fish_residual(params: Sequence[float]) -> np.ndarray:
    r, phi = params
    if r <= 0.0:
        return np.array([10.0, 10.0])
    short, long = _fish_arcs(r, phi)
    if short is None or long is None:
        return np.array([10.0, 10.0])
    return np.array([_wrap(short.end[2] + np.pi / 2), _wrap(long.end[2] + np.pi / 2)])


def _fish_network(r: float, phi: float) -> Tuple[Network, List[np.ndarray]]:
    short, long = _fish_arcs(r, phi)
    top = r * _direction(phi)
    curves = [
        Curve(nodes=np.vstack([short.nodes, _mirror_x(short.nodes)[::-1][1:]])),
        Curve(nodes=np.vstack([long.nodes, _mirror_x(long.nodes)[::-1][1:]])),
        Curve(nodes=_ray(top, R_TRUNC * _direction(phi))),
        Curve(nodes=_ray(_mirror_x(top), R_TRUNC * _direction(-phi))),
    ]
    net = Network.assemble(curves, [[(0, "start"), (1, "start"), (2, "start")], [(0, "end"), (1, "end"), (3, "start")]],
                           [(2, "end"), (3, "end")], validate=False)
    return net, [short.table, long.table, _ray_states(top, phi)]


def solve_fish(phi_range: Tuple[float, float] = (5.0, 85.0), r_range: Tuple[float, float] = (0.1, 4.0),
               grid: Tuple[int, int] = (17, 27), starts: int = 8) -> ShrinkerProfile:
    """
    Junctions r(cos phi, +-sin phi) with halflines pointing away from the
    origin; both arcs of the upper junction must meet the x-axis at a right
    angle. phi = 90 degrees is the lens, so the search keeps phi in (2, 88).
    """
    phis = np.deg2rad(np.linspace(*phi_range, grid[0]))
    rs = np.linspace(*r_range, grid[1])
    scored = []
    for phi in phis:
        for r in rs:
            g = _fish_residual((r, phi))
            if np.all(np.abs(g) < np.pi / 2):
                scored.append((float(np.linalg.norm(g)), r, phi))
    scored.sort()
    tried = []
    for _, r0, phi0 in scored[:starts]:
        sol = root(_fish_residual, x0=[r0, phi0], method="hybr", options={"xtol": 1e-14})
        r, phi = (float(v) for v in sol.x)
        res = float(np.max(np.abs(_fish_residual((r, phi)))))
        tried.append({"r0": r0, "phi0": phi0, "r": r, "phi": phi, "residual": res})
        if res > SHOOT_TOL or not (np.deg2rad(2.0) < phi < np.deg2rad(88.0)):
            continue
        net, arcs = _fish_network(r, phi)
        try:
            check_embedded(net)
        except NotEmbedded:
            continue
        profile = ShrinkerProfile("Fish", net, symmetry_axes=1, parameters={"r": r, "phi": phi},
                                  rays=(tuple(_direction(phi)), tuple(_direction(-phi))), arcs=arcs,
                                  junction_defect=res)
        profile.residual = ode_certificate(arcs)
        return profile
    raise SolverFailed("fish: no admissible shooting solution", params={"attempts": tried})


def four_halflines() -> ShrinkerProfile:
    """Rays at 0, 120, 180 and 300 degrees: two lines crossing at the origin."""
    first = np.vstack([_ray(np.zeros(2), R_TRUNC * _direction(np.pi))[::-1], _ray(np.zeros(2), np.array([R_TRUNC, 0.0]))[1:]])
    a, b = np.deg2rad(120.0), np.deg2rad(300.0)
    second = np.vstack([_ray(np.zeros(2), R_TRUNC * _direction(b))[::-1], _ray(np.zeros(2), R_TRUNC * _direction(a))[1:]])
    net = Network.assemble([Curve(nodes=first), Curve(nodes=second)], [],
                           [(0, "start"), (0, "end"), (1, "start"), (1, "end")], validate=False)
    rays = tuple(tuple(_direction(np.deg2rad(d))) for d in (0.0, 120.0, 180.0, 300.0))
    return ShrinkerProfile("FourHalflines", net, symmetry_axes=2, rays=rays, degenerate=True)


def two_halflines_120() -> ShrinkerProfile:
    a = np.deg2rad(120.0)
    nodes = np.vstack([_ray(np.zeros(2), np.array([R_TRUNC, 0.0]))[::-1], _ray(np.zeros(2), R_TRUNC * _direction(a))[1:]])
    net = Network.assemble([Curve(nodes=nodes)], [], [(0, "start"), (0, "end")], validate=False)
    return ShrinkerProfile("TwoHalflines120", net, symmetry_axes=1,
                           rays=((1.0, 0.0), tuple(_direction(a))), degenerate=True)


# ---------------------------------------------------------------------------
# Theta probe
# ---------------------------------------------------------------------------

@dataclass
class ProbeReport:
    heading_deg: float
    bracket: Tuple[float, float]
    samples: int
    radii: List[float] = field(repr=False)
    residuals: List[float] = field(repr=False)
    roots: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def root_count(self) -> int:
        return len(self.roots)


def _side_arc_residual(r: float, heading: float) -> float:
    """Arc from (0, r) must reach the positive x-axis at a right angle without crossing the y-axis."""
    arc = integrate_arc((0.0, r), heading, axis="x", direction=-1.0)
    if arc is None or np.any(arc.nodes[1:, 0] <= 0.0):
        return np.nan
    return _wrap(arc.end[2] + np.pi / 2)


def theta_nonexistence_probe(bracket: Tuple[float, float] = (0.05, 4.0), samples: int = 240,
                             heading_deg: float = 30.0) -> ProbeReport:
    """
    Sweep junction heights r for a symmetric theta: junctions (0, +-r) joined
    by the segment on the y-axis, side arcs leaving at 30 degrees. With
    heading -30 degrees the same sweep is the lens (halflines along the
    y-axis), which serves as the control.
    """
    heading = np.deg2rad(heading_deg)
    radii, vals, brackets = scan_roots(lambda r: _side_arc_residual(r, heading), bracket[0], bracket[1], samples)
    logger.info("theta probe heading %.1f deg over [%g, %g]: %d sign changes", heading_deg, *bracket, len(brackets))
    return ProbeReport(heading_deg=heading_deg, bracket=tuple(bracket), samples=samples, radii=list(map(float, radii)),
                       residuals=list(map(float, vals)), roots=brackets)


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

def _build_catalog() -> Dict[str, ShrinkerProfile]:
    profiles = [line(), halfline(), unit_circle(), standard_triod(), solve_spoon(), solve_lens(), solve_fish(),
                four_halflines(), two_halflines_120()]
    catalog = {p.name: p for p in profiles}
    for p in profiles:
        logger.info("atlas %s: residual %.2e junction defect %.2e certified=%s", p.name, p.residual,
                    p.junction_defect, p.certified)
    return catalog


@lru_cache(maxsize=1)
def _cached_catalog() -> Dict[str, ShrinkerProfile]:
    return _build_catalog()


def catalog() -> Dict[str, ShrinkerProfile]:
    """All profiles keyed by name, built once per process unless ATLAS_CACHE is off."""
    if load_config()["ATLAS_CACHE"]:
        return _cached_catalog()
    return _build_catalog()


def rotated(profile: ShrinkerProfile, angle: float) -> ShrinkerProfile:
    net = profile.network.transformed(rotation(angle))
    rays = tuple(tuple(rotation(angle) @ np.asarray(r)) for r in profile.rays)
    return ShrinkerProfile(profile.name, net, profile.symmetry_axes, dict(profile.parameters), rays, profile.arcs,
                           profile.residual, profile.junction_defect, profile.degenerate)
