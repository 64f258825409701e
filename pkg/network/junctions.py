# network/junctions.py
import logging
from typing import List, Sequence, Tuple

import numpy as np

from geometry.primitives import Curve, end_tangent, one_sided_derivative
from network.model import End, Incidence, Network
from utils.errors import DegenerateCurve, JunctionSolveFailed

logger = logging.getLogger(__name__)

NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-10
ACCEPT_TOL = 1e-3


def exterior_tangents(network: Network, junction_index: int) -> np.ndarray:
    """Three unit tangents leaving the junction along its curves."""
    j = network.junctions[junction_index]
    return np.array([end_tangent(network.curves[i.curve].nodes, i.end is End.START) for i in j.incident])


def _neighbours(nodes: np.ndarray, inc: Incidence) -> Tuple[np.ndarray, np.ndarray]:
    if inc.end is End.START:
        return nodes[1], nodes[2] if len(nodes) > 2 else nodes[1]
    return nodes[-2], nodes[-3] if len(nodes) > 2 else nodes[-2]


def _tangent_sum(x: np.ndarray, stencils: Sequence[Tuple[np.ndarray, np.ndarray, bool]]) -> np.ndarray:
    total = np.zeros(2)
    for p1, p2, short in stencils:
        d = (p1 - x) if short else one_sided_derivative(x, p1, p2)
        n = np.linalg.norm(d)
        if n <= 1e-300:
            raise DegenerateCurve("junction sits on its neighbour node")
        total += d / n
    return total


def solve_junction_position(nodes: List[np.ndarray], incident: Sequence[Incidence],
                            tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER) -> Tuple[np.ndarray, int, float]:
    """
    Newton iteration (finite-difference Jacobian, backtracking) for the junction
    position that makes the three discrete exterior tangents sum to zero.
    Returns the position, the iteration count and the final residual norm.
    """
    stencils = []
    for inc in incident:
        arr = nodes[inc.curve]
        p1, p2 = _neighbours(arr, inc)
        stencils.append((p1, p2, len(arr) < 3))
    x = np.array(nodes[incident[0].curve][0 if incident[0].end is End.START else -1], dtype=float)
    scale = max(min(np.linalg.norm(s[0] - x) for s in stencils), 1e-12)
    f = _tangent_sum(x, stencils)
    fn = float(np.linalg.norm(f))
    it = 0
    while fn > tol and it < max_iter:
        it += 1
        eta = 1e-7 * scale
        jac = np.empty((2, 2))
        for c in range(2):
            dx = np.zeros(2)
            dx[c] = eta
            jac[:, c] = (_tangent_sum(x + dx, stencils) - f) / eta
        try:
            step = -np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            break
        limit = 0.5 * scale
        norm = float(np.linalg.norm(step))
        if norm > limit:
            step *= limit / norm
        alpha = 1.0
        improved = False
        while alpha > 1e-6:
            trial = x + alpha * step
            try:
                ft = _tangent_sum(trial, stencils)
            except DegenerateCurve:
                alpha *= 0.5
                continue
            if np.linalg.norm(ft) < fn:
                x, f, fn = trial, ft, float(np.linalg.norm(ft))
                improved = True
                break
            alpha *= 0.5
        if not improved:
            break
    return x, it, fn


def project_junctions(network: Network, accept_tol: float = ACCEPT_TOL) -> Network:
    """Move every junction to its Herring position for the current neighbour nodes."""
    if not network.junctions:
        return network
    nodes = [c.nodes.copy() for c in network.curves]
    for p, j in enumerate(network.junctions):
        x, it, residual = solve_junction_position(nodes, j.incident)
        if residual > accept_tol:
            raise JunctionSolveFailed(
                f"junction {j.label}: tangent sum {residual:.3e} after {it} Newton iterations"
            )
        logger.debug("junction %s placed in %d iterations, residual %.2e", j.label, it, residual)
        for inc in j.incident:
            nodes[inc.curve][0 if inc.end is End.START else -1] = x
    curves = [Curve(nodes=n, closed=c.closed, lam=c.lam) for n, c in zip(nodes, network.curves)]
    return network.with_curves(curves)
