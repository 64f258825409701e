# singularity/rates.py
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from diagnostics.quantities import DiagnosticsSample, nominal_area_rate
from network.topology import Loop, loop_area_rate
from utils.errors import InvalidArgument

logger = logging.getLogger(__name__)

MIN_TAIL = 10
STATIONARY_TOL = 1e-3


def predicted_collapse_time(loop: Loop, t_now: float) -> float:
    """
    t + A / |dA/dt|. For a loop whose corners are all convex this is
    t + 3A / ((6 - m) pi); reflex corners slow the loss accordingly.
    """
    rate = loop_area_rate(loop) if loop.corner_turns else nominal_area_rate(loop.m)
    if rate >= 0.0:
        raise InvalidArgument(f"loop with m={loop.m} and corner turns {loop.corner_turns} does not lose area")
    return float(t_now + loop.area / -rate)


@dataclass
class BlowupFit:
    slope: float  # of log max k^2 against log(T - t)
    C: float  # min of max k^2 * sqrt(T - t) over the tail
    C_linear: float  # min of max k^2 * (T - t) over the tail
    samples: int
    accepted: bool


def blowup_rate_check(samples: Sequence[DiagnosticsSample], T: float) -> BlowupFit:
    """
    Fit the curvature blow-up on the samples before T. A type-I collapse has
    slope -1; the tail is rejected when it is stationary or does not blow up
    at least like (T - t)^(-1/2).
    """
    tail = [s for s in samples if s.t < T and np.isfinite(s.max_abs_k) and s.max_abs_k > 0.0]
    if len(tail) < MIN_TAIL:
        raise InvalidArgument(f"need at least {MIN_TAIL} samples before T={T:.6g}, got {len(tail)}")
    gap = T - np.array([s.t for s in tail])
    k2 = np.array([s.max_abs_k for s in tail]) ** 2
    slope = float(np.polyfit(np.log(gap), np.log(k2), 1)[0])
    C = float(np.min(k2 * np.sqrt(gap)))
    C_linear = float(np.min(k2 * gap))
    stationary = np.ptp(k2) <= STATIONARY_TOL * k2.max()
    accepted = (not stationary) and slope <= -0.5 and C > 0.0
    if stationary:
        logger.info("curvature tail is stationary; no blow-up rate before T=%.6g", T)
    return BlowupFit(slope=slope, C=C, C_linear=C_linear, samples=len(tail), accepted=bool(accepted))
