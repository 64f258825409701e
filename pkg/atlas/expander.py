# atlas/expander.py
"""
Self-expanding germ used to restart the flow after a four-point forms.

The symmetric germ has its junctions at (0, +-b) joined by the segment on the
y-axis; each junction sends two arcs of the expander ODE at 30 and 150
degrees (upper junction) whose directions converge to the rays at 60 and 120
degrees. The germ for any input in the 120/60 pattern is this one rotated
onto the input rays.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from atlas.ode import EXPANDER, self_similar_rhs
from atlas.shrinkers import ODE_TOL, R_TRUNC, SHOOT_TOL, ode_certificate, _wrap
from geometry.primitives import Curve, rotation
from network.model import Network
from utils.errors import InvalidArgument, SolverFailed

logger = logging.getLogger(__name__)

PATTERN_TOL = np.deg2rad(2.0)
ASYMPTOTIC_LENGTH = 3.0 * R_TRUNC
GERM_DS = 0.02
REFERENCE_RAYS = np.deg2rad([60.0, 120.0, 240.0, 300.0])


@dataclass
class ExpanderGerm:
    directions: Tuple[Tuple[float, float], ...]  # rays actually matched, in angular order
    network: Network
    b: float  # half distance between the junctions of the unit germ
    scale: float
    rotation: float
    residual: float
    arcs: List[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def middle_length(self) -> float:
        return 2.0 * self.b * self.scale

    @property
    def junction_positions(self) -> Tuple[np.ndarray, np.ndarray]:
        return tuple(np.asarray(j.position) for j in self.network.junctions)


def _branch(b: float, length: float = ASYMPTOTIC_LENGTH):
    y0 = np.array([0.0, b, np.deg2rad(30.0)])
    return solve_ivp(lambda s, y: self_similar_rhs(s, y, EXPANDER), (0.0, length), y0, method="DOP853",
                     rtol=ODE_TOL, atol=ODE_TOL, dense_output=True)


def _branch_residual(b: float) -> float:
    """Asymptotic heading of the upper-right arc minus the 60 degree ray."""
    sol = _branch(b)
    if sol.status != 0:
        return np.nan
    return _wrap(sol.y[2, -1] - np.deg2rad(60.0))


@lru_cache(maxsize=1)
def solve_symmetric_germ(lo: float = 1e-3, hi: float = 3.0, samples: int = 80) -> Tuple[float, float]:
    """Half junction distance b of the unit germ and its shooting residual."""
    bs = np.linspace(lo, hi, samples)
    vals = np.array([_branch_residual(b) for b in bs])
    for a, c, fa, fc in zip(bs[:-1], bs[1:], vals[:-1], vals[1:]):
        if np.isfinite(fa) and np.isfinite(fc) and fa * fc <= 0.0:
            b = brentq(_branch_residual, a, c, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
            res = abs(_branch_residual(b))
            if res > SHOOT_TOL:
                raise SolverFailed(f"expander: residual {res:.3e} above {SHOOT_TOL:.0e}", params={"b": b})
            logger.info("expander germ b=%.12g residual %.2e", b, res)
            return float(b), float(res)
    raise SolverFailed(f"expander: no shooting bracket in [{lo}, {hi}]", params={"lo": lo, "hi": hi, "samples": samples})


def pattern_rotation(directions: Sequence[Sequence[float]], tol: float = PATTERN_TOL) -> Tuple[float, np.ndarray]:
    """
    Check the alternating 120/60 gaps and return the rotation carrying the
    reference rays onto the input, with the input angles sorted to match.
    """
    d = np.asarray(directions, dtype=float)
    if d.shape != (4, 2):
        raise InvalidArgument(f"expected four directions, got array of shape {d.shape}")
    angles = np.sort(np.mod(np.arctan2(d[:, 1], d[:, 0]), 2.0 * np.pi))
    gaps = np.diff(np.concatenate([angles, angles[:1] + 2.0 * np.pi]))
    best = None
    for shift in range(4):
        order = np.roll(angles, -shift)
        g = np.roll(gaps, -shift)
        # reference gaps starting at the 60 degree ray: 60, 120, 60, 120
        if np.all(np.abs(g - np.deg2rad([60.0, 120.0, 60.0, 120.0])) <= tol):
            offset = np.angle(np.mean(np.exp(1j * (order - REFERENCE_RAYS))))
            err = np.max(np.abs([_wrap(a - r - offset) for a, r in zip(order, REFERENCE_RAYS)]))
            if best is None or err < best[0]:
                best = (err, float(offset), order)
    if best is None:
        raise InvalidArgument(f"directions do not form the 120/60 pattern: gaps {np.rad2deg(gaps).round(2).tolist()} degrees")
    return best[1], best[2]


def _arc_table(sol, s_end: float) -> np.ndarray:
    k = max(9, int(np.ceil(s_end / GERM_DS)) + 1)
    grid = np.linspace(0.0, s_end, k)
    return np.column_stack([grid, sol.sol(grid).T])


def _truncate_length(sol) -> float:
    """Arclength where the upper-right arc leaves the ball of radius R_TRUNC."""
    s, xy = sol.t, sol.y[:2].T
    r = np.linalg.norm(xy, axis=1)
    k = int(np.argmax(r >= R_TRUNC))
    if r[k] < R_TRUNC:
        return float(s[-1])
    return float(brentq(lambda t: np.linalg.norm(sol.sol(t)[:2]) - R_TRUNC, s[k - 1], s[k]))


def expander_germ(directions: Sequence[Sequence[float]], scale: float = 1.0) -> ExpanderGerm:
    """
    Tree-like expander with two junctions whose four arcs follow the given
    rays, scaled about the origin by `scale`.
    """
    if scale <= 0.0:
        raise InvalidArgument(f"scale must be positive, got {scale}")
    offset, _ = pattern_rotation(directions)
    b, shoot_res = solve_symmetric_germ()
    sol = _branch(b)
    table = _arc_table(sol, _truncate_length(sol))
    arm = table[:, 1:3]

    def flip(points, sx, sy):
        return points * np.array([sx, sy])

    upper_right, upper_left = arm, flip(arm, -1.0, 1.0)
    lower_right, lower_left = flip(arm, 1.0, -1.0), flip(arm, -1.0, -1.0)
    middle = np.linspace([0.0, b], [0.0, -b], max(9, int(np.ceil(2 * b / GERM_DS)) + 1))
    transform = scale * rotation(offset)
    curves = [Curve(nodes=c @ transform.T) for c in (middle, upper_right, upper_left, lower_right, lower_left)]
    net = Network.assemble(
        curves,
        [[(0, "start"), (1, "start"), (2, "start")], [(0, "end"), (3, "start"), (4, "start")]],
        [(1, "end"), (2, "end"), (3, "end"), (4, "end")],
        validate=False,
    )
    rays = tuple(tuple(rotation(offset) @ np.array([np.cos(a), np.sin(a)])) for a in REFERENCE_RAYS)
    middle_table = np.column_stack([np.linspace(0.0, 2 * b, len(middle)), middle, np.full(len(middle), -np.pi / 2)])
    residual = max(ode_certificate([table, middle_table], sign=EXPANDER), shoot_res)
    return ExpanderGerm(directions=rays, network=net, b=b, scale=float(scale), rotation=float(offset),
                        residual=residual, arcs=[table, middle_table])


def asymptotic_directions(germ: ExpanderGerm) -> List[float]:
    """Headings of the four arcs at their far ends, in radians."""
    out = []
    for c in germ.network.curves[1:]:
        d = c.nodes[-1] - c.nodes[-2]
        out.append(float(np.arctan2(d[1], d[0])))
    return out
