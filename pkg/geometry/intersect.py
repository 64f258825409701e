# geometry/intersect.py
from typing import Iterable, List, Optional, Sequence

import numpy as np

from geometry.primitives import diameter


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def point_in_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """
    Even-odd ray casting towards +x for many points at once.
    Upward edges include their start node, downward edges their end node,
    horizontal edges never count.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.asarray(polygon, dtype=float)
    b = np.roll(a, -1, axis=0)
    X, Y = pts[:, 0][:, None], pts[:, 1][:, None]
    x1, y1, x2, y2 = a[:, 0][None, :], a[:, 1][None, :], b[:, 0][None, :], b[:, 1][None, :]
    up = (y1 < y2) & (y1 <= Y) & (Y < y2)
    down = (y1 > y2) & (y1 > Y) & (Y >= y2)
    with np.errstate(divide="ignore", invalid="ignore"):
        x0 = x1 + (x2 - x1) / (y2 - y1) * (Y - y1)
    hits = (up | down) & (X < x0)
    return (np.sum(hits, axis=1) % 2) == 1


def segments_from_polylines(polylines: Iterable[np.ndarray], closed_flags: Optional[Sequence[bool]] = None):
    """Stack polyline edges into (m, 2) start and end arrays plus an owner index."""
    starts: List[np.ndarray] = []
    ends: List[np.ndarray] = []
    owner: List[np.ndarray] = []
    for i, line in enumerate(polylines):
        p = np.asarray(line, dtype=float)
        closed = bool(closed_flags[i]) if closed_flags is not None else False
        q = np.vstack([p[1:], p[:1]]) if closed else p[1:]
        p = p if closed else p[:-1]
        starts.append(p)
        ends.append(q)
        owner.append(np.full(len(p), i))
    if not starts:
        return np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0, dtype=int)
    return np.vstack(starts), np.vstack(ends), np.concatenate(owner)


def segment_hits_network(a, b, polylines: Iterable[np.ndarray], excluded: Iterable = (),
                         tol: Optional[float] = None, closed_flags: Optional[Sequence[bool]] = None,
                         segments=None) -> bool:
    """
    True iff the open segment (a, b) meets a network edge away from the
    excluded points. Collinear overlaps are not reported as hits.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if segments is None:
        segments = segments_from_polylines(list(polylines), closed_flags)
    c, d, _ = segments
    if len(c) == 0:
        return False
    if tol is None:
        tol = 1e-9 * max(diameter(np.vstack([c, d])), float(np.linalg.norm(b - a)))
    r = b - a
    s = d - c
    denom = _cross(r[None, :], s)
    ca = c - a
    rn = float(np.linalg.norm(r))
    sn = np.linalg.norm(s, axis=1)
    valid = np.abs(denom) > 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(valid, _cross(ca, s) / denom, np.nan)
        u = np.where(valid, _cross(ca, r[None, :]) / denom, np.nan)
    eps_t = tol / rn
    eps_u = tol / np.maximum(sn, 1e-300)
    hit = valid & (t > eps_t) & (t < 1.0 - eps_t) & (u >= -eps_u) & (u <= 1.0 + eps_u)
    if not np.any(hit):
        return False
    points = a + t[hit][:, None] * r
    excl = [np.asarray(e, dtype=float) for e in excluded]
    if not excl:
        return True
    excl_arr = np.vstack(excl)
    dist = np.linalg.norm(points[:, None, :] - excl_arr[None, :, :], axis=2)
    return bool(np.any(dist.min(axis=1) > tol))


def crossing_pairs(starts: np.ndarray, ends: np.ndarray, chunk: int = 256) -> np.ndarray:
    """
    Index pairs (i, j), i < j, of edges whose interiors cross transversally.
    Edges that only touch at a shared node are not reported.
    """
    m = len(starts)
    found: List[np.ndarray] = []
    s_all = ends - starts
    for lo in range(0, m, chunk):
        hi = min(m, lo + chunk)
        p, r = starts[lo:hi, None, :], s_all[lo:hi, None, :]
        q, s = starts[None, :, :], s_all[None, :, :]
        d1 = _cross(r, q - p)
        d2 = _cross(r, q + s - p)
        d3 = _cross(s, p - q)
        d4 = _cross(s, p + r - q)
        cross = (d1 * d2 < 0) & (d3 * d4 < 0)
        ii, jj = np.nonzero(cross)
        ii = ii + lo
        keep = ii < jj
        found.append(np.column_stack([ii[keep], jj[keep]]))
    if not found:
        return np.zeros((0, 2), dtype=int)
    return np.vstack(found)


def is_simple_polygon(polygon: np.ndarray) -> bool:
    p = np.asarray(polygon, dtype=float)
    n = len(p)
    q = np.roll(p, -1, axis=0)
    pairs = crossing_pairs(p, q)
    if len(pairs):
        return False
    # repeated vertices make the boundary touch itself
    _, counts = np.unique(np.round(p / max(diameter(p), 1e-300), 12), axis=0, return_counts=True)
    return bool(np.all(counts == 1)) and n >= 3
