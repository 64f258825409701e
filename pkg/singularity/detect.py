# singularity/detect.py
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from diagnostics.quantities import DiagnosticsSample
from flow.engine import FlowState
from geometry.primitives import Point2
from network.model import End, Network
from network.topology import Loop, extract_loops, loop_area_rate

logger = logging.getLogger(__name__)


class EventKind(str, Enum):
    INTERNAL_CURVE_COLLAPSE = "InternalCurveCollapse"
    BOUNDARY_CURVE_COLLAPSE = "BoundaryCurveCollapse"
    REGION_COLLAPSE = "RegionCollapse"
    CURVATURE_BLOWUP = "CurvatureBlowup"


class Thresholds(BaseModel):
    """Unset values follow the mesh scale h: eps_len = 4h, eps_area = (4h)^2, k_region = 0.25/h, k_hi = 10/h."""
    eps_len: Optional[float] = Field(None, gt=0.0)
    eps_area: Optional[float] = Field(None, gt=0.0)
    k_region: Optional[float] = Field(None, gt=0.0)
    k_hi: Optional[float] = Field(None, gt=0.0)

    def resolve(self, h_target: float) -> "Thresholds":
        return Thresholds(
            eps_len=self.eps_len if self.eps_len is not None else 4.0 * h_target,
            eps_area=self.eps_area if self.eps_area is not None else (4.0 * h_target) ** 2,
            k_region=self.k_region if self.k_region is not None else 0.25 / h_target,
            k_hi=self.k_hi if self.k_hi is not None else 10.0 / h_target,
        )


@dataclass
class DegenerateCore:
    """Where the collapsing part of the network ends up: a 4-point, a 2-point at an endpoint, or a region core."""
    kind: str
    point: Point2
    curves: Tuple[int, ...]


@dataclass
class SingularEvent:
    kind: EventKind
    t: float
    T_estimate: float
    location: Point2
    curves: Tuple[int, ...] = ()
    loop: Tuple[int, ...] = ()
    blowup_class: Optional[str] = None
    anomalous: bool = False  # curvature blow-up without a collapse, or junctions reaching an endpoint
    simultaneous: Tuple[int, ...] = field(default=())  # boundary curves collapsing together with an internal one

    @property
    def halts(self) -> bool:
        return bool(self.simultaneous)


def curve_roles(network: Network) -> List[str]:
    """'internal' (junction to another junction), 'loop', 'boundary' (junction to endpoint) or 'free'."""
    roles = network.end_roles()
    out = []
    for i, c in enumerate(network.curves):
        if c.closed:
            out.append("free")
            continue
        a, b = roles[(i, End.START)], roles[(i, End.END)]
        kinds = {a[0], b[0]}
        if kinds == {"junction"}:
            out.append("loop" if a == b else "internal")
        elif kinds == {"junction", "endpoint"}:
            out.append("boundary")
        else:
            out.append("free")
    return out


def extrapolate_zero(times: Sequence[float], values: Sequence[float]) -> Optional[float]:
    """Time where a decreasing series reaches zero: quadratic fit over three samples, linear over two."""
    t = np.asarray(times[-3:], dtype=float)
    v = np.asarray(values[-3:], dtype=float)
    if len(t) < 2 or v[-1] >= v[-2]:
        return None
    linear = t[-1] + v[-1] * (t[-1] - t[-2]) / (v[-2] - v[-1])
    if len(t) == 3 and np.ptp(t) > 0:
        roots = np.roots(np.polyfit(t - t[-1], v, 2))
        real = [float(r.real) + t[-1] for r in roots if abs(r.imag) < 1e-12 and r.real >= 0.0]
        if real:
            return min(real)
    return float(linear)


def _centroid(polygon: np.ndarray) -> np.ndarray:
    p = np.asarray(polygon)
    q = np.roll(p, -1, axis=0)
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    a = 0.5 * cross.sum()
    if abs(a) < 1e-300:
        return p.mean(axis=0)
    return np.array([((p[:, 0] + q[:, 0]) * cross).sum(), ((p[:, 1] + q[:, 1]) * cross).sum()]) / (6.0 * a)


def _loop_max_curvature(network: Network, loop: Loop) -> float:
    return float(max(np.abs(network.curves[i].curvature).max() for i in loop.curve_ids))


def detect(state: FlowState, thresholds: Thresholds, history: Sequence[DiagnosticsSample] = (),
           loops: Optional[List[Loop]] = None) -> Optional[SingularEvent]:
    """
    At most one event, region collapse first, then internal before boundary
    curve collapse. `thresholds` must be resolved; `history` feeds the
    collapse-time extrapolation of curve lengths.
    """
    net = state.network
    loops = extract_loops(net) if loops is None else loops
    for lp in loops:
        if lp.area < thresholds.eps_area and _loop_max_curvature(net, lp) > thresholds.k_region:
            rate = loop_area_rate(lp)
            T = state.t + lp.area / -rate if rate < 0 else state.t
            return SingularEvent(kind=EventKind.REGION_COLLAPSE, t=state.t, T_estimate=float(T),
                                 location=Point2.of(_centroid(lp.polygon)), curves=lp.curve_ids, loop=lp.curve_ids)

    roles = curve_roles(net)
    lengths = [c.length for c in net.curves]
    internal = [i for i, r in enumerate(roles) if r == "internal" and lengths[i] < thresholds.eps_len]
    boundary = [i for i, r in enumerate(roles) if r == "boundary" and lengths[i] < thresholds.eps_len]
    if internal or boundary:
        i = min(internal, key=lengths.__getitem__) if internal else min(boundary, key=lengths.__getitem__)
        series = [s.L_i[i] for s in history if len(s.L_i) == len(lengths)]
        times = [s.t for s in history if len(s.L_i) == len(lengths)]
        T = extrapolate_zero(times + [state.t], series + [lengths[i]]) or state.t
        c = net.curves[i]
        kind = EventKind.INTERNAL_CURVE_COLLAPSE if internal else EventKind.BOUNDARY_CURVE_COLLAPSE
        event = SingularEvent(kind=kind, t=state.t, T_estimate=float(max(T, state.t)),
                              location=Point2.of(0.5 * (c.nodes[0] + c.nodes[-1])), curves=(i,),
                              simultaneous=tuple(boundary) if internal else ())
        if event.simultaneous:
            # the internal curve joins both junctions, so every collapsing boundary curve takes
            # them onto its endpoint together; regular flows never reach this configuration
            event.anomalous = True
            logger.error("curve %d and boundary curves %s collapse together at t=%.6g: both junctions reach an endpoint",
                         i, boundary, state.t)
        return event

    k_max = max(float(np.abs(c.curvature).max()) for c in net.curves)
    if k_max > thresholds.k_hi:
        worst = int(np.argmax([np.abs(c.curvature).max() for c in net.curves]))
        c = net.curves[worst]
        logger.warning("curvature %.3e above %.3e without a collapsing region at t=%.6g", k_max, thresholds.k_hi, state.t)
        return SingularEvent(kind=EventKind.CURVATURE_BLOWUP, t=state.t, T_estimate=state.t,
                             location=Point2.of(c.nodes[int(np.argmax(np.abs(c.curvature)))]), curves=(worst,),
                             anomalous=True)
    return None


def degenerate_core(network: Network, event: SingularEvent) -> DegenerateCore:
    if event.kind is EventKind.REGION_COLLAPSE:
        return DegenerateCore("region", event.location, event.loop)
    if event.kind is EventKind.INTERNAL_CURVE_COLLAPSE:
        return DegenerateCore("4-point", event.location, event.curves)
    if event.kind is EventKind.BOUNDARY_CURVE_COLLAPSE:
        roles = network.end_roles()
        i = event.curves[0]
        for end in (End.START, End.END):
            kind, r = roles[(i, end)]
            if kind == "endpoint":
                return DegenerateCore("2-point", network.endpoints[r].position, event.curves)
    return DegenerateCore("curvature", event.location, event.curves)


