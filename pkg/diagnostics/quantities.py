# diagnostics/quantities.py
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from network.model import Network
from network.topology import Loop, extract_loops, loop_area_rate
from utils.errors import InvalidArgument


@dataclass
class DiagnosticsSample:
    t: float
    L: float
    L_i: Tuple[float, ...]
    A_i: Tuple[float, ...]
    int_k2: float
    max_abs_k: float
    theta: Tuple[float, ...] = ()
    E: float = float("nan")
    Pi: float = float("nan")
    loop_keys: Tuple[Tuple[int, ...], ...] = field(default=(), repr=False)


def curvature_integral(network: Network) -> float:
    """Trapezoid rule for the integral of k^2 over all curves."""
    return float(sum(c.integrate(c.curvature ** 2) for c in network.curves))


def max_curvature(network: Network) -> float:
    return float(max(np.abs(c.curvature).max() for c in network.curves))


def loop_areas(network: Network) -> List[Loop]:
    return extract_loops(network)


def measure(network: Network, t: float, theta: Sequence[float] = (), E: float = float("nan"),
            Pi: float = float("nan")) -> DiagnosticsSample:
    loops = extract_loops(network)
    return DiagnosticsSample(
        t=float(t),
        L=network.total_length,
        L_i=tuple(c.length for c in network.curves),
        A_i=tuple(lp.area for lp in loops),
        int_k2=curvature_integral(network),
        max_abs_k=max_curvature(network),
        theta=tuple(theta),
        E=E,
        Pi=Pi,
        loop_keys=tuple(lp.key for lp in loops),
    )


def length_dissipation_residual(window: Sequence[DiagnosticsSample]) -> float:
    """
    |dL/dt + int k^2| at the midpoint of the first and last sample of the
    window, with the curvature integral averaged between the two.
    """
    if len(window) < 2:
        raise InvalidArgument("length dissipation needs at least two samples")
    a, b = window[0], window[-1]
    dt = b.t - a.t
    if dt <= 0:
        raise InvalidArgument("samples must be strictly increasing in time")
    return abs((b.L - a.L) / dt + 0.5 * (a.int_k2 + b.int_k2))


def nominal_area_rate(m: int) -> float:
    """-2 pi + m pi / 3 for a loop with m convex 120 degree corners."""
    return -2.0 * np.pi + m * np.pi / 3.0


def area_law_residual(times: Sequence[float], areas: Sequence[float], m: Optional[int] = None,
                      loop: Optional[Loop] = None) -> float:
    """
    |dA/dt - rate| with dA/dt the least-squares slope over the window; the
    rate comes from the loop's corner geometry when a Loop is given.
    """
    t = np.asarray(times, dtype=float)
    a = np.asarray(areas, dtype=float)
    if len(t) < 2:
        raise InvalidArgument("area law needs at least two samples")
    if loop is not None:
        rate = loop_area_rate(loop)
    elif m is not None:
        rate = nominal_area_rate(m)
    else:
        raise InvalidArgument("pass either the corner count m or the Loop")
    slope = np.polyfit(t, a, 1)[0] if len(t) > 2 else (a[1] - a[0]) / (t[1] - t[0])
    return float(abs(slope - rate))


def loop_series(samples: Sequence[DiagnosticsSample], key: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray]:
    """Times and areas of the loop with the given curve-id key while it exists."""
    ts, As = [], []
    for s in samples:
        if key in s.loop_keys:
            ts.append(s.t)
            As.append(s.A_i[s.loop_keys.index(key)])
    return np.asarray(ts), np.asarray(As)


def steiner_check(network: Network, tol: float = 1e-3) -> Dict[str, float]:
    """Zero-curvature test for limit networks: max |k| and the worst chord deviation per length."""
    worst = 0.0
    for c in network.curves:
        if c.closed:
            return {"max_abs_k": max_curvature(network), "straightness": float("inf"), "passed": 0.0}
        chord = c.nodes[-1] - c.nodes[0]
        norm = np.linalg.norm(chord)
        if norm == 0.0:
            return {"max_abs_k": max_curvature(network), "straightness": float("inf"), "passed": 0.0}
        offsets = np.abs((c.nodes - c.nodes[0]) @ np.array([-chord[1], chord[0]]) / norm)
        worst = max(worst, float(offsets.max() / norm))
    k = max_curvature(network)
    return {"max_abs_k": k, "straightness": worst, "passed": float(k < tol and worst < tol)}
