# flow/tangential.py
import numpy as np

from geometry.primitives import Curve


def tangential_velocity(curve: Curve, omega: float = 1.0, start_speed: float = 0.0,
                        end_speed: float = 0.0) -> np.ndarray:
    """
    Equidistributing tangential speed per node.

    Each node is pushed towards the larger of its two neighbouring gaps,
    lam_j = omega * (h_plus - h_minus) / h_mean**2, which vanishes on a uniform
    mesh. Open curves get zero from this term at their ends and, on top, the
    linear-in-arclength interpolation of the prescribed end speeds (the
    tangential part of the junction motion; zero at fixed endpoints).
    """
    h = curve.seg_lengths
    if curve.closed:
        h_mean = curve.length / curve.n
        return omega * (h - np.roll(h, 1)) / h_mean ** 2
    h_mean = curve.length / (curve.n - 1)
    lam = np.zeros(curve.n)
    lam[1:-1] = omega * (h[1:] - h[:-1]) / h_mean ** 2
    s = curve.cum_arclength / curve.length
    return lam + (1.0 - s) * start_speed + s * end_speed
