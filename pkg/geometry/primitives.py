# geometry/primitives.py
"""
Planar primitives shared by every other package.

Conventions fixed here once:
  * nodes are float arrays of shape (n, 2);
  * tau is the unit tangent in the direction of increasing node index and
    nu = R tau is its counterclockwise rotation by pi/2;
  * k is the signed curvature with curvature vector k * nu, so a
    counterclockwise circle of radius r has k = +1/r.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, List, NamedTuple, Optional, Sequence

import numpy as np

from utils.errors import DegenerateCurve, InvalidArgument, NotSimple

SEGMENT_EPS = 1e-14


class Point2(NamedTuple):
    x: float
    y: float

    @classmethod
    def of(cls, xy) -> "Point2":
        return cls(float(xy[0]), float(xy[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


def as_nodes(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidArgument(f"expected an (n, 2) array of nodes, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument("node coordinates must be finite")
    return arr


def rotate_ccw(v: np.ndarray) -> np.ndarray:
    """R v: counterclockwise rotation by pi/2 along the last axis."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n <= SEGMENT_EPS):
        raise DegenerateCurve("cannot normalise a zero vector")
    return v / n


def angle_between(u: np.ndarray, v: np.ndarray) -> float:
    """Unsigned angle in [0, pi] between two vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.arctan2(abs(u[0] * v[1] - u[1] * v[0]), u[0] * v[0] + u[1] * v[1]))


def rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def one_sided_derivative(p0: np.ndarray, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """Second-order one-sided first derivative at p0 on the arclength grid p0, p1, p2."""
    h1 = float(np.linalg.norm(p1 - p0))
    h2 = float(np.linalg.norm(p2 - p1))
    if h1 <= SEGMENT_EPS or h2 <= SEGMENT_EPS:
        raise DegenerateCurve("zero-length segment next to a curve end")
    return (
        -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * p0
        + (h1 + h2) / (h1 * h2) * p1
        - h1 / (h2 * (h1 + h2)) * p2
    )


def end_tangent(nodes: np.ndarray, at_start: bool) -> np.ndarray:
    """
    Exterior unit tangent of an open polyline at one of its ends, i.e. the
    direction leaving the end point into the curve.
    """
    pts = nodes if at_start else nodes[::-1]
    if len(pts) >= 3:
        d = one_sided_derivative(pts[0], pts[1], pts[2])
    else:
        d = pts[1] - pts[0]
    return unit(d)


# ---------------------------------------------------------------------------
# Curve
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Curve:
    """
    Open or closed polyline. A closed curve is periodic (no repeated node); a
    loop that starts and ends at the same junction is an *open* curve whose
    first and last nodes coincide.
    """
    nodes: np.ndarray
    closed: bool = False
    lam: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        nodes = as_nodes(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        minimum = 3 if self.closed else 2
        if len(nodes) < minimum:
            raise InvalidArgument(f"a {'closed' if self.closed else 'open'} curve needs at least {minimum} nodes, got {len(nodes)}")
        if np.any(self.seg_lengths <= SEGMENT_EPS):
            bad = int(np.argmin(self.seg_lengths))
            raise DegenerateCurve(f"segment {bad} has zero length")
        if self.lam is not None:
            lam = np.asarray(self.lam, dtype=float)
            if lam.shape != (len(nodes),):
                raise InvalidArgument(f"lambda has shape {lam.shape}, expected ({len(nodes)},)")
            object.__setattr__(self, "lam", lam)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @cached_property
    def segments(self) -> np.ndarray:
        if self.closed:
            return np.roll(self.nodes, -1, axis=0) - self.nodes
        return np.diff(self.nodes, axis=0)

    @cached_property
    def seg_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.segments, axis=1)

    @cached_property
    def cum_arclength(self) -> np.ndarray:
        """Arclength at every node; for closed curves the total length is appended."""
        return np.concatenate([[0.0], np.cumsum(self.seg_lengths)])

    @property
    def length(self) -> float:
        return float(self.cum_arclength[-1])

    @property
    def is_loop(self) -> bool:
        """Open curve whose two ends sit at the same point."""
        return (not self.closed) and bool(np.allclose(self.nodes[0], self.nodes[-1], atol=1e-12))

    @cached_property
    def tangents(self) -> np.ndarray:
        u = self.segments / self.seg_lengths[:, None]
        if self.closed:
            return unit(np.roll(u, 1, axis=0) + u)
        tau = np.empty_like(self.nodes)
        if len(self.nodes) > 2:
            tau[1:-1] = unit(u[:-1] + u[1:])
        tau[0] = end_tangent(self.nodes, at_start=True)
        tau[-1] = -end_tangent(self.nodes, at_start=False)
        return tau

    @cached_property
    def normals(self) -> np.ndarray:
        return rotate_ccw(self.tangents)

    @cached_property
    def curvature(self) -> np.ndarray:
        return discrete_curvature(self)

    @cached_property
    def dual_lengths(self) -> np.ndarray:
        """Trapezoid weights for integrals along the curve."""
        h = self.seg_lengths
        if self.closed:
            return 0.5 * (h + np.roll(h, 1))
        w = np.zeros(self.n)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
        return w

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.dual_lengths, values))

    def with_nodes(self, nodes: np.ndarray, lam: Optional[np.ndarray] = None) -> "Curve":
        return Curve(nodes=nodes, closed=self.closed, lam=lam)

    def reversed(self) -> "Curve":
        lam = None if self.lam is None else -self.lam[::-1]
        return Curve(nodes=self.nodes[::-1].copy(), closed=self.closed, lam=lam)

    def transformed(self, matrix: np.ndarray, shift: np.ndarray = np.zeros(2)) -> "Curve":
        return Curve(nodes=self.nodes @ np.asarray(matrix).T + shift, closed=self.closed)


def _end_second_derivative(p: np.ndarray) -> np.ndarray:
    """Second arclength derivative at p[0] of the cubic through the four nodes p."""
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(p, axis=0), axis=1))])
    w = np.empty(4)
    for j in range(4):
        others = np.delete(s, j)
        w[j] = -2.0 * others.sum() / np.prod(s[j] - others)
    return w @ p


def second_derivative(curve: Curve) -> np.ndarray:
    """
    Three-point non-uniform approximation of the arclength second derivative.
    The ends of an open curve use the one-sided four-point formula (the
    three-point one when the curve has only three nodes).
    """
    x = curve.nodes
    h = curve.seg_lengths
    if curve.closed:
        hm, hp = np.roll(h, 1), h
        xm, xp = np.roll(x, 1, axis=0), np.roll(x, -1, axis=0)
        return 2.0 / (hm + hp)[:, None] * ((xp - x) / hp[:, None] - (x - xm) / hm[:, None])
    inner = 2.0 / (h[:-1] + h[1:])[:, None] * (
        (x[2:] - x[1:-1]) / h[1:, None] - (x[1:-1] - x[:-2]) / h[:-1, None]
    )
    if curve.n < 4:
        return np.concatenate([inner[:1], inner, inner[-1:]], axis=0)
    first = _end_second_derivative(x[:4])
    last = _end_second_derivative(x[::-1][:4])
    return np.concatenate([first[None, :], inner, last[None, :]], axis=0)


def discrete_curvature(curve: Curve) -> np.ndarray:
    """
    Signed curvature per node with curvature vector k * nu. Open curves need
    three nodes; their end values are one-sided.
    """
    if not curve.closed and curve.n < 3:
        raise InvalidArgument("discrete curvature needs at least 3 nodes on an open curve")
    return np.einsum("ij,ij->i", second_derivative(curve), curve.normals)


def resample_equidistant(curve: Curve, n: int) -> Curve:
    if n < 3:
        raise InvalidArgument(f"resampling needs n >= 3, got {n}")
    s = curve.cum_arclength
    total = s[-1]
    if curve.closed:
        pts = np.vstack([curve.nodes, curve.nodes[:1]])
        targets = np.linspace(0.0, total, n + 1)[:-1]
    else:
        pts = curve.nodes
        targets = np.linspace(0.0, total, n)
    out = np.column_stack([np.interp(targets, s, pts[:, 0]), np.interp(targets, s, pts[:, 1])])
    if not curve.closed:
        out[0] = curve.nodes[0]
        out[-1] = curve.nodes[-1]
    return Curve(nodes=out, closed=curve.closed)


def shoelace(jordan: np.ndarray) -> float:
    """Signed area, positive for counterclockwise order."""
    p = np.asarray(jordan, dtype=float)
    q = np.roll(p, -1, axis=0)
    return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))


def strip_closing_node(jordan: np.ndarray) -> np.ndarray:
    p = as_nodes(jordan)
    if len(p) > 1 and np.allclose(p[0], p[-1], atol=1e-12):
        p = p[:-1]
    return p


def polygon_area(jordan, check_simple: bool = True) -> float:
    from geometry.intersect import is_simple_polygon

    p = strip_closing_node(jordan)
    if len(p) < 3:
        raise InvalidArgument("a polygon needs at least three vertices")
    if check_simple and not is_simple_polygon(p):
        raise NotSimple("polygon boundary crosses itself")
    return abs(shoelace(p))


def diameter(points: np.ndarray) -> float:
    p = np.asarray(points, dtype=float)
    lo, hi = p.min(axis=0), p.max(axis=0)
    return float(np.linalg.norm(hi - lo))


def hausdorff_polylines(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two dense point clouds."""
    from scipy.spatial import cKDTree

    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(initial=0.0), db.max(initial=0.0)))


def densify(nodes: np.ndarray, spacing: float, closed: bool = False) -> np.ndarray:
    """Insert points along each segment so no gap exceeds spacing."""
    pts = np.vstack([nodes, nodes[:1]]) if closed else np.asarray(nodes)
    out: List[np.ndarray] = []
    for a, b in zip(pts[:-1], pts[1:]):
        k = max(1, int(np.ceil(np.linalg.norm(b - a) / spacing)))
        t = np.arange(k)[:, None] / k
        out.append(a + t * (b - a))
    out.append(pts[-1:])
    return np.vstack(out)


# ---------------------------------------------------------------------------
# Convex domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConvexDomain:
    boundary: np.ndarray
    anchors: tuple = ()

    def __post_init__(self):
        b = strip_closing_node(self.boundary)
        if shoelace(b) < 0:
            b = b[::-1].copy()
        object.__setattr__(self, "boundary", b)
        object.__setattr__(self, "anchors", tuple(Point2.of(a) for a in self.anchors))
        e1 = np.roll(b, -1, axis=0) - b
        e0 = b - np.roll(b, 1, axis=0)
        turn = e0[:, 0] * e1[:, 1] - e0[:, 1] * e1[:, 0]
        if np.any(turn <= 0):
            raise InvalidArgument("domain polygon is not strictly convex")
        for a in self.anchors:
            if self.distance_to_boundary(a.as_array()) > 1e-9 * diameter(b):
                raise InvalidArgument(f"anchor {tuple(a)} is not on the domain boundary")

    @classmethod
    def disk(cls, center=(0.0, 0.0), radius: float = 1.0, n: int = 256,
             anchors: Iterable = ()) -> "ConvexDomain":
        """Regular polygon on a circle with the anchor points inserted as extra vertices."""
        if n < 128:
            raise InvalidArgument(f"domain polygons use at least 128 vertices, got {n}")
        c = np.asarray(center, dtype=float)
        anchor_pts = [np.asarray(a, dtype=float) for a in anchors]
        angles = list(np.linspace(0.0, 2.0 * np.pi, n, endpoint=False))
        anchor_angles = []
        for a in anchor_pts:
            r = np.linalg.norm(a - c)
            if abs(r - radius) > 1e-9 * radius:
                raise InvalidArgument(f"anchor {tuple(a)} is not on the circle of radius {radius}")
            anchor_angles.append(float(np.arctan2(a[1] - c[1], a[0] - c[0]) % (2.0 * np.pi)))
        gap = 0.25 * 2.0 * np.pi / n
        angles = [t for t in angles if all(min(abs(t - s), 2 * np.pi - abs(t - s)) > gap for s in anchor_angles)]
        angles = np.sort(np.array(angles + anchor_angles))
        boundary = c + radius * np.column_stack([np.cos(angles), np.sin(angles)])
        exact = {int(np.argmin(np.abs(angles - s))): a for s, a in zip(anchor_angles, anchor_pts)}
        for i, a in exact.items():
            boundary[i] = a
        return cls(boundary=boundary, anchors=tuple(anchor_pts))

    def distance_to_boundary(self, point: np.ndarray) -> float:
        a = self.boundary
        b = np.roll(a, -1, axis=0)
        ab = b - a
        t = np.clip(np.einsum("ij,ij->i", point - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
        proj = a + t[:, None] * ab
        return float(np.min(np.linalg.norm(proj - point, axis=1)))

    def contains(self, points: np.ndarray) -> np.ndarray:
        from geometry.intersect import point_in_polygon

        return point_in_polygon(np.atleast_2d(points), self.boundary)

    def transformed(self, matrix: np.ndarray, shift: np.ndarray = np.zeros(2)) -> "ConvexDomain":
        m = np.asarray(matrix, dtype=float)
        return ConvexDomain(
            boundary=self.boundary @ m.T + shift,
            anchors=tuple(np.asarray(a) @ m.T + shift for a in self.anchors),
        )


def no_three_collinear(points: Sequence[np.ndarray], tol: float = 1e-9) -> bool:
    pts = [np.asarray(p, dtype=float) for p in points]
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            for k in range(j + 1, len(pts)):
                u, v = pts[j] - pts[i], pts[k] - pts[i]
                scale = max(np.linalg.norm(u) * np.linalg.norm(v), SEGMENT_EPS)
                if abs(u[0] * v[1] - u[1] * v[0]) / scale < tol:
                    return False
    return True
