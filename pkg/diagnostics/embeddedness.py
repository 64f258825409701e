# diagnostics/embeddedness.py
"""
Embeddedness measure E of a network and its reflected variant Pi.

For two nodes p, q the chord [p, q] and an injective network path from p to q
bound a region; A_pq is the smallest such area. Path areas come from prefix
sums of the shoelace terms along every curve, so once the prefixes and the
vertex-to-vertex paths of the curve graph are known each candidate region
costs O(1). Pairs are visited in increasing order of the lower bound
|p - q|^2 / A_pq and the search stops as soon as the bound reaches the best
admissible value found so far.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np

from geometry.intersect import crossing_pairs, point_in_polygon, segment_hits_network, segments_from_polylines
from geometry.primitives import Curve, Point2
from network.model import End, Incidence, Network
from network.topology import Loop, extract_loops
from utils.errors import InvalidArgument, NotEmbedded

logger = logging.getLogger(__name__)

FOUR_SQRT3 = 4.0 * np.sqrt(3.0)

PathTable = Dict[Tuple[str, str], List[Tuple[frozenset, float]]]


@dataclass
class EmbeddednessReport:
    E: float
    p: Optional[Point2] = None
    q: Optional[Point2] = None
    p_tag: str = "junction"
    q_tag: str = "junction"
    p_on_loop: bool = False
    q_on_loop: bool = False
    p_index: Optional[Tuple[int, int]] = None  # (curve, node)
    q_index: Optional[Tuple[int, int]] = None
    A_pq: float = float("nan")
    psi: float = float("nan")
    A_loop: float = float("nan")
    alpha_p: float = float("nan")
    alpha_q: float = float("nan")

    @property
    def at_three_point(self) -> bool:
        """No admissible pair beats the 3-point value 4 sqrt(3)."""
        return self.p is None


@dataclass
class _CurveData:
    nodes: np.ndarray  # periodic curves repeat their first node at the end
    tangents: np.ndarray
    prefix: np.ndarray
    start: str
    end: str
    tags: List[str]
    loops: np.ndarray  # bitmask of the loops each node lies on
    sample: np.ndarray

    @property
    def total(self) -> float:
        return float(self.prefix[-1])


def _cross_terms(nodes: np.ndarray) -> np.ndarray:
    return nodes[:-1, 0] * nodes[1:, 1] - nodes[:-1, 1] * nodes[1:, 0]


def _vertex_names(network: Network) -> List[Tuple[str, str]]:
    roles = network.end_roles()
    names = []
    for i, c in enumerate(network.curves):
        if c.closed:
            names.append((f"C{i}", f"C{i}"))
            continue
        pair = []
        for end in (End.START, End.END):
            kind, idx = roles[(i, end)]
            pair.append(("J" if kind == "junction" else "P") + str(idx))
        names.append((pair[0], pair[1]))
    return names


def _sample_indices(n: int, closed: bool, stride: int) -> np.ndarray:
    if closed:
        return np.arange(0, n, stride)
    idx = np.arange(0, n, stride)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return idx


def _curve_data(network: Network, loops: List[Loop], stride: int) -> List[_CurveData]:
    names = _vertex_names(network)
    roles = network.end_roles()
    loop_vertices = []
    for lp in loops:
        verts = set()
        for cid in lp.curve_ids:
            verts.update(names[cid])
        loop_vertices.append(verts)
    out = []
    for i, c in enumerate(network.curves):
        nodes = np.vstack([c.nodes, c.nodes[:1]]) if c.closed else c.nodes
        tangents = np.vstack([c.tangents, c.tangents[:1]]) if c.closed else c.tangents
        prefix = np.concatenate([[0.0], np.cumsum(_cross_terms(nodes))])
        tags = ["interior"] * len(nodes)
        mask = np.zeros(len(nodes), dtype=np.int64)
        for b, lp in enumerate(loops):
            if i in lp.curve_ids:
                mask |= 1 << b
        if not c.closed:
            for end, k in ((End.START, 0), (End.END, len(nodes) - 1)):
                kind, _ = roles[(i, end)]
                tags[k] = kind
                vertex = names[i][0 if end is End.START else 1]
                for b, verts in enumerate(loop_vertices):
                    if vertex in verts:
                        mask[k] |= 1 << b
        out.append(_CurveData(nodes=nodes, tangents=tangents, prefix=prefix, start=names[i][0], end=names[i][1],
                              tags=tags, loops=mask, sample=_sample_indices(c.n, c.closed, stride)))
    return out


def _path_table(network: Network, data: List[_CurveData]) -> PathTable:
    """Signed shoelace sums of every simple vertex-to-vertex path in the curve graph."""
    g = network.curve_graph()
    g.remove_edges_from([e for e in g.edges(keys=True) if e[0] == e[1]])
    table: PathTable = {}
    vertices = sorted(g.nodes)
    for u in vertices:
        table[(u, u)] = [(frozenset(), 0.0)]
        for v in vertices:
            if u == v:
                continue
            entries = []
            for path in nx.all_simple_edge_paths(g, u, v):
                current, total, used = u, 0.0, []
                for a, b, k in path:
                    other = b if a == current else a
                    total += data[k].total if data[k].start == current else -data[k].total
                    used.append(k)
                    current = other
                entries.append((frozenset(used), total))
            table[(u, v)] = entries
    return table


def _block(a: int, b: int, ca: _CurveData, cb: _CurveData, paths: PathTable, floor: float):
    """Minimal path area and squared chord length for all sampled pairs of curves a <= b."""
    i, j = ca.sample, cb.sample
    P, Q = ca.nodes[i], cb.nodes[j]
    diff = Q[None, :, :] - P[:, None, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    chord = Q[None, :, 0] * P[:, None, 1] - Q[None, :, 1] * P[:, None, 0]
    exits = [(ca.start, -ca.prefix[i]), (ca.end, ca.total - ca.prefix[i])]
    entries = [(cb.start, cb.prefix[j]), (cb.end, -(cb.total - cb.prefix[j]))]
    if a == b:
        best = 0.5 * np.abs(cb.prefix[j][None, :] - ca.prefix[i][:, None] + chord)
        for used, s in paths.get((ca.start, ca.end), []):
            if a in used:
                continue
            cand = 0.5 * np.abs(exits[0][1][:, None] + s + entries[1][1][None, :] + chord)
            best = np.minimum(best, cand)
        valid = i[:, None] < j[None, :]
    else:
        best = np.full(d2.shape, np.inf)
        for u, sx in exits:
            for v, sy in entries:
                for used, s in paths.get((u, v), []):
                    if a in used or b in used:
                        continue
                    best = np.minimum(best, 0.5 * np.abs(sx[:, None] + s + sy[None, :] + chord))
        valid = np.ones(d2.shape, dtype=bool)
    valid &= d2 > floor
    with np.errstate(divide="ignore"):
        phi = np.where(valid & (best > floor), d2 / np.where(best > 0, best, 1.0), np.inf)
    ii, jj = np.nonzero(np.isfinite(phi))
    return phi[ii, jj], best[ii, jj], d2[ii, jj], i[ii], j[jj]


def _face_area(mid: np.ndarray, loops: List[Loop]) -> Optional[float]:
    """Area of the bounded complementary component containing the point, if any."""
    containing = [lp for lp in loops if point_in_polygon(mid[None, :], lp.polygon)[0]]
    if not containing:
        return None
    outer = min(containing, key=lambda lp: lp.area)
    area = outer.area
    for lp in loops:
        if any(lp is c for c in containing) or lp.area >= outer.area:
            continue
        probe = lp.polygon[len(lp.polygon) // 2]
        if point_in_polygon(probe[None, :], outer.polygon)[0]:
            area -= lp.area
    return area


def _angle(tangent: np.ndarray, chord: np.ndarray) -> float:
    u = chord / np.linalg.norm(chord)
    return float(np.arccos(np.clip(tangent @ u, -1.0, 1.0)))


def check_embedded(network: Network) -> None:
    starts, ends, owner = segments_from_polylines([c.nodes for c in network.curves], [c.closed for c in network.curves])
    pairs = crossing_pairs(starts, ends)
    if len(pairs):
        a, b = pairs[0]
        raise NotEmbedded(f"curves {owner[a]} and {owner[b]} cross ({len(pairs)} crossing segment pairs)")


def embeddedness_measure(network: Network, stride: int = 1) -> EmbeddednessReport:
    """
    E = min(4 sqrt 3, inf over admissible node pairs of |p-q|^2 / A_pq), with
    psi(A_pq) = (A / pi) sin(pi A_pq / A) replacing A_pq when both nodes lie on
    a common loop and the chord runs through a bounded face of area A.
    """
    if stride < 1:
        raise InvalidArgument(f"stride must be at least 1, got {stride}")
    check_embedded(network)
    loops = extract_loops(network)
    data = _curve_data(network, loops, stride)
    paths = _path_table(network, data)
    scale = max(network.diameter, 1e-300)
    floor = (1e-12 * scale) ** 2

    blocks = []
    for a in range(len(data)):
        for b in range(a, len(data)):
            phi, area, d2, i, j = _block(a, b, data[a], data[b], paths, floor)
            if len(phi):
                blocks.append((phi, area, d2, np.full(len(phi), a), i, np.full(len(phi), b), j))
    report = EmbeddednessReport(E=FOUR_SQRT3)
    if not blocks:
        return report
    phi, area, d2, ca, ni, cb, nj = (np.concatenate(col) for col in zip(*blocks))
    order = np.lexsort((nj, cb, ni, ca, phi))

    segments = segments_from_polylines([c.nodes for c in network.curves], [c.closed for c in network.curves])
    tol = 1e-9 * scale
    best = FOUR_SQRT3
    for k in order:
        if phi[k] >= best:
            break
        A_pq = float(area[k])
        p = data[ca[k]].nodes[ni[k]]
        q = data[cb[k]].nodes[nj[k]]
        value, psi, A_loop = float(phi[k]), A_pq, float("nan")
        if data[ca[k]].loops[ni[k]] & data[cb[k]].loops[nj[k]]:
            face = _face_area(0.5 * (p + q), loops)
            if face is not None:
                A_loop = face
                psi = face / np.pi * np.sin(np.pi * A_pq / face)
                value = float(d2[k] / psi) if psi > 0 else np.inf
        if value >= best:
            continue
        if segment_hits_network(p, q, (), excluded=(p, q), tol=tol, segments=segments):
            continue
        best = value
        pa, qa = data[ca[k]], data[cb[k]]
        report = EmbeddednessReport(
            E=value,
            p=Point2.of(p),
            q=Point2.of(q),
            p_tag=pa.tags[ni[k]],
            q_tag=qa.tags[nj[k]],
            p_on_loop=bool(pa.loops[ni[k]]),
            q_on_loop=bool(qa.loops[nj[k]]),
            p_index=(int(ca[k]), int(ni[k])),
            q_index=(int(cb[k]), int(nj[k])),
            A_pq=A_pq,
            psi=float(psi),
            A_loop=A_loop,
            alpha_p=_angle(pa.tangents[ni[k]], q - p) if pa.tags[ni[k]] == "interior" else float("nan"),
            alpha_q=_angle(qa.tangents[nj[k]], p - q) if qa.tags[nj[k]] == "interior" else float("nan"),
        )
    logger.debug("embeddedness E=%.6g over %d candidate pairs", report.E, len(order))
    return report


# ---------------------------------------------------------------------------
# Reflection through endpoints
# ---------------------------------------------------------------------------

def reflect_through_endpoint(network: Network, r: int) -> Network:
    """
    Union of the network with its point reflection through endpoint r. The
    curve ending at the endpoint and its mirror image are glued into one
    curve passing through it; the result may carry up to four junctions.
    """
    e = network.endpoints[r]
    centre = np.asarray(e.position)
    g = e.incident.curve
    flip = -np.eye(2)
    mirrored = [c.transformed(flip, 2.0 * centre) for c in network.curves]
    gamma = network.curves[g] if e.incident.end is End.END else network.curves[g].reversed()
    mirror = mirrored[g] if e.incident.end is End.END else mirrored[g].reversed()
    glued = Curve(nodes=np.vstack([gamma.nodes, mirror.nodes[::-1][1:]]))

    curves: List[Curve] = list(network.curves)
    curves[g] = glued
    mirror_index: Dict[int, int] = {}
    for k, c in enumerate(mirrored):
        if k != g:
            mirror_index[k] = len(curves)
            curves.append(c)

    def original(inc: Incidence) -> Tuple[int, str]:
        return (g, "start") if inc.curve == g else (inc.curve, inc.end.value)

    def reflected(inc: Incidence) -> Tuple[int, str]:
        return (g, "end") if inc.curve == g else (mirror_index[inc.curve], inc.end.value)

    junctions = [[original(i) for i in j.incident] for j in network.junctions]
    junctions += [[reflected(i) for i in j.incident] for j in network.junctions]
    endpoints = [original(x.incident) for s, x in enumerate(network.endpoints) if s != r]
    endpoints += [reflected(x.incident) for s, x in enumerate(network.endpoints) if s != r]
    return Network.assemble(curves, junctions, endpoints, validate=False)


def reflected_measure(network: Network, stride: int = 1) -> float:
    """Pi = min over endpoints of E of the doubled network; E itself without endpoints."""
    if not network.endpoints:
        return embeddedness_measure(network, stride).E
    return min(embeddedness_measure(reflect_through_endpoint(network, r), stride).E
               for r in range(len(network.endpoints)))
