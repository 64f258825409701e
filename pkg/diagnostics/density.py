# diagnostics/density.py
"""
Gaussian densities, Huisken rescaling and the rescaled monotonicity terms.

Kernel integrals are evaluated exactly on every polyline segment (the
Gaussian restricted to a line is a one-dimensional Gaussian, so each segment
contributes a difference of error functions); the defect integral uses the
trapezoid rule on the nodes.
"""
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy.special import erf

from geometry.primitives import Point2
from geometry.intersect import segments_from_polylines
from network.model import End, Network
from utils.errors import InvalidArgument

SQRT_2PI = float(np.sqrt(2.0 * np.pi))


def _kernel_line_integral(network: Network, x0: np.ndarray, tau: float) -> float:
    """Integral of exp(-|x-x0|^2/(4 tau)) / sqrt(4 pi tau) over all curves."""
    starts, ends, _ = segments_from_polylines([c.nodes for c in network.curves], [c.closed for c in network.curves])
    seg = ends - starts
    length = np.linalg.norm(seg, axis=1)
    u = seg / length[:, None]
    rel = starts - x0
    b = np.einsum("ij,ij->i", rel, u)
    d2 = np.maximum(np.einsum("ij,ij->i", rel, rel) - b ** 2, 0.0)
    scale = 2.0 * np.sqrt(tau)
    parts = 0.5 * np.exp(-d2 / (4.0 * tau)) * (erf((length + b) / scale) - erf(b / scale))
    return float(parts.sum())


def gaussian_density(network: Network, x0, t0: float, t: float) -> float:
    if t >= t0:
        raise InvalidArgument(f"Gaussian density needs t < t0, got t={t} and t0={t0}")
    return _kernel_line_integral(network, np.asarray(x0, dtype=float), t0 - t)


@dataclass(frozen=True, eq=False)
class RescaledFrame:
    center: Point2
    T: float
    t: float
    log_time: float  # -1/2 log(T - t)
    factor: float  # 1 / sqrt(2 (T - t))
    network: Network


def rescale(network: Network, x0, t: float, T: float) -> RescaledFrame:
    if t >= T:
        raise InvalidArgument(f"rescaling needs t < T, got t={t} and T={T}")
    factor = 1.0 / np.sqrt(2.0 * (T - t))
    x0 = np.asarray(x0, dtype=float)
    moved = network.transformed(factor * np.eye(2), -factor * x0)
    return RescaledFrame(center=Point2.of(x0), T=float(T), t=float(t), log_time=float(-0.5 * np.log(T - t)),
                         factor=float(factor), network=moved)


@dataclass
class MonotonicityTerms:
    value: float
    defect: float
    boundary: float

    @property
    def rate(self) -> float:
        """Right-hand side of the rescaled monotonicity identity."""
        return -self.defect + self.boundary


def monotonicity_functional(frame: RescaledFrame) -> MonotonicityTerms:
    """
    value = int exp(-|x|^2/2), defect = int (k + <x, nu>)^2 exp(-|x|^2/2) and
    the endpoint sum of <P, tau_out> exp(-|P|^2/2) (fixed ends have no
    tangential speed).
    """
    net = frame.network
    value = SQRT_2PI * _kernel_line_integral(net, np.zeros(2), 0.5)
    defect = 0.0
    for c in net.curves:
        x = c.nodes
        rho = np.exp(-0.5 * np.einsum("ij,ij->i", x, x))
        shrinker = c.curvature + np.einsum("ij,ij->i", x, c.normals)
        defect += c.integrate(shrinker ** 2 * rho)
    boundary = 0.0
    for e in net.endpoints:
        c = net.curves[e.incident.curve]
        p = np.asarray(e.position)
        tau_out = -c.tangents[0] if e.incident.end is End.START else c.tangents[-1]
        boundary += float(p @ tau_out) * float(np.exp(-0.5 * p @ p))
    return MonotonicityTerms(value=float(value), defect=float(defect), boundary=float(boundary))


@dataclass
class MonotonicityCheck:
    log_times: List[float]
    values: List[float]
    residuals: List[float]
    increments: List[float]
    max_residual: float
    non_increasing: bool


def monotonicity_check(frames: Sequence[RescaledFrame], tol: float = 1e-3) -> MonotonicityCheck:
    """
    Compare the finite-difference slope of the functional between consecutive
    frames with the averaged identity -defect + boundary; for endpoint-free
    networks also confirm the value never increases by more than tol.
    """
    if len(frames) < 2:
        raise InvalidArgument("monotonicity check needs at least two frames")
    terms = [monotonicity_functional(f) for f in frames]
    times = [f.log_time for f in frames]
    residuals, increments = [], []
    for k in range(len(frames) - 1):
        dtau = times[k + 1] - times[k]
        if dtau <= 0:
            raise InvalidArgument("frames must be ordered by rescaled time")
        slope = (terms[k + 1].value - terms[k].value) / dtau
        residuals.append(abs(slope - 0.5 * (terms[k].rate + terms[k + 1].rate)))
        increments.append(terms[k + 1].value - terms[k].value)
    endpoint_free = all(not f.network.endpoints for f in frames)
    return MonotonicityCheck(
        log_times=times,
        values=[t.value for t in terms],
        residuals=residuals,
        increments=increments,
        max_residual=float(max(residuals)),
        non_increasing=bool(endpoint_free and max(increments) <= tol),
    )
