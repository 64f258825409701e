# atlas/classify.py
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from atlas.shrinkers import ShrinkerProfile, catalog
from diagnostics.density import RescaledFrame
from geometry.primitives import densify, rotation
from network.model import Network
from utils.errors import EmptyBlowup

logger = logging.getLogger(__name__)

CLASSIFY_RADIUS = 5.0
GRID_DEG = 0.5
SPACING = 0.02
COARSE_POINTS = 400


@dataclass
class BlowupMatch:
    name: str
    distance: float
    rotation: float
    residual: float
    distances: Dict[str, float] = field(default_factory=dict)


def clipped_points(network: Network, radius: float = CLASSIFY_RADIUS, spacing: float = SPACING) -> np.ndarray:
    pts = np.vstack([densify(c.nodes, spacing, c.closed) for c in network.curves])
    return pts[np.linalg.norm(pts, axis=1) <= radius]


def shrinker_residual(network: Network, radius: float = CLASSIFY_RADIUS) -> float:
    """sup |k + <x, nu>| over interior nodes inside the ball."""
    worst = 0.0
    for c in network.curves:
        x = c.nodes
        r = np.abs(c.curvature + np.einsum("ij,ij->i", x, c.normals))
        inside = np.linalg.norm(x, axis=1) <= radius
        if not c.closed:
            inside[[0, -1]] = False
        if np.any(inside):
            worst = max(worst, float(r[inside].max()))
    return worst


def rotation_optimized_distance(frame_pts: np.ndarray, template_pts: np.ndarray,
                                grid_deg: float = GRID_DEG) -> Tuple[float, float]:
    """
    min over rotations R of the Hausdorff distance between the frame points
    and R applied to the template points: grid search, then a bounded scalar
    refinement around the best grid angle.
    """
    frame_tree = cKDTree(frame_pts)
    template_tree = cKDTree(template_pts)

    def distance(angle: float, fp: np.ndarray, tp: np.ndarray) -> float:
        rot = rotation(angle)
        d1 = frame_tree.query(tp @ rot.T)[0].max()
        d2 = template_tree.query(fp @ rot)[0].max()
        return float(max(d1, d2))

    fp = frame_pts[:: max(1, len(frame_pts) // COARSE_POINTS)]
    tp = template_pts[:: max(1, len(template_pts) // COARSE_POINTS)]
    angles = np.deg2rad(np.arange(0.0, 360.0, grid_deg))
    coarse = np.array([distance(a, fp, tp) for a in angles])
    a0 = float(angles[int(np.argmin(coarse))])
    step = np.deg2rad(grid_deg)
    refined = minimize_scalar(lambda a: distance(a, frame_pts, template_pts), bounds=(a0 - step, a0 + step),
                              method="bounded", options={"xatol": 1e-8})
    best = distance(a0, frame_pts, template_pts)
    if refined.success and refined.fun < best:
        return float(refined.fun), float(refined.x)
    return best, a0


def classify_network(network: Network, radius: float = CLASSIFY_RADIUS,
                     profiles: Optional[Iterable[ShrinkerProfile]] = None) -> BlowupMatch:
    pts = clipped_points(network, radius)
    if len(pts) == 0:
        raise EmptyBlowup(f"no part of the rescaled network lies in the ball of radius {radius}")
    profiles = list(profiles) if profiles is not None else list(catalog().values())
    distances: Dict[str, float] = {}
    angles: Dict[str, float] = {}
    for prof in profiles:
        tpts = clipped_points(prof.network, radius)
        if len(tpts) == 0:
            continue
        distances[prof.name], angles[prof.name] = rotation_optimized_distance(pts, tpts)
    name = min(distances, key=distances.get)
    match = BlowupMatch(name=name, distance=distances[name], rotation=angles[name],
                        residual=shrinker_residual(network, radius), distances=distances)
    logger.info("blow-up classified as %s at distance %.3e", name, match.distance)
    return match


def classify_blowup(frame: RescaledFrame, radius: float = CLASSIFY_RADIUS,
                    profiles: Optional[Iterable[ShrinkerProfile]] = None) -> BlowupMatch:
    return classify_network(frame.network, radius, profiles)
