# flow/engine.py
"""
Time stepping for motion by curvature of a network.

Per step and per curve the normal part of the second arclength derivative is
treated implicitly and the tangential redistribution explicitly:

    X_j - dt nu_j nu_j^T (D_ss X)_j = X_j^n + dt lam_j tau_j

with D_ss the three-point non-uniform stencil. Curve ends are held during the
solve; afterwards every junction is Newton-placed so its three discrete
exterior tangents balance, and fixed endpoints never move.
"""
import logging
from dataclasses import dataclass, field
from typing import Collection, Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, Field
from scipy.sparse.linalg import spsolve

from diagnostics.embeddedness import check_embedded
from flow.tangential import tangential_velocity
from geometry.primitives import Curve, resample_equidistant
from network.junctions import project_junctions
from network.model import End, Network
from network.topology import DEFAULT_ANGLE_TOL, classify_topology, validate_regular
from utils.errors import InvalidArgument, JunctionSolveFailed, MeshCollapse

logger = logging.getLogger(__name__)

INITIAL_ANGLE_LIMIT = np.deg2rad(5.0)


class StepControl(BaseModel):
    cfl: float = Field(0.4, gt=0.0, le=0.5)
    dt_floor: float = Field(1e-12, gt=0.0)
    nodes_per_curve: int = Field(200, ge=9)
    remesh_ratio: float = Field(3.0, gt=1.0)
    h_target: float = Field(0.02, gt=0.0)
    omega: float = Field(1.0, ge=0.0, le=1.25)

    def target_nodes(self, length: float) -> int:
        return int(max(9, min(self.nodes_per_curve, round(length / self.h_target) + 1)))


@dataclass(frozen=True, eq=False)
class FlowState:
    network: Network
    t: float = 0.0
    dt: float = 0.0
    step_index: int = 0
    junction_velocity: Tuple[np.ndarray, ...] = field(default=(), repr=False)

    def junction_speed(self, p: int) -> np.ndarray:
        if p < len(self.junction_velocity):
            return self.junction_velocity[p]
        return np.zeros(2)


def initial_state(network: Network, t0: float = 0.0) -> FlowState:
    """
    Reject initial data whose curves cross or whose junction angles miss 120
    degrees by more than 5. A declared topology tag must agree with the
    combinatorics.
    """
    check_embedded(network)
    if len(network.junctions) == 2:
        tag = classify_topology(network)
        if network.topology is not None and network.topology is not tag:
            raise InvalidArgument(f"network is tagged {network.topology.value} but its curves form a {tag.value}")
    report = validate_regular(network, INITIAL_ANGLE_LIMIT)
    if not report.passed:
        raise InvalidArgument(
            f"initial network is not regular: junction angles deviate by {report.max_deviation_deg:.2f} degrees"
        )
    return FlowState(network=network, t=t0, junction_velocity=tuple(np.zeros(2) for _ in network.junctions))


def min_segment(network: Network) -> float:
    return float(min(c.seg_lengths.min() for c in network.curves))


def stable_dt(network: Network, control: StepControl) -> float:
    return control.cfl * min_segment(network) ** 2


def _end_speeds(network: Network, state: FlowState) -> Dict[int, Tuple[float, float]]:
    speeds: Dict[int, List[float]] = {i: [0.0, 0.0] for i in range(len(network.curves))}
    for p, j in enumerate(network.junctions):
        v = state.junction_speed(p)
        for inc in j.incident:
            tau = network.curves[inc.curve].tangents
            if inc.end is End.START:
                speeds[inc.curve][0] = float(v @ tau[0])
            else:
                speeds[inc.curve][1] = float(v @ tau[-1])
    return {i: (a, b) for i, (a, b) in speeds.items()}


def assemble_curve_system(curve: Curve, dt: float, lam: np.ndarray) -> Tuple[sp.csr_matrix, np.ndarray]:
    """Sparse 2n x 2n system for one curve, unknowns interleaved (x0, y0, x1, y1, ...)."""
    n = curve.n
    x = curve.nodes
    h = curve.seg_lengths
    nu = curve.normals
    tau = curve.tangents
    if curve.closed:
        rows_j = np.arange(n)
        hm, hp = np.roll(h, 1), h
        jm, jp = np.roll(rows_j, 1), np.roll(rows_j, -1)
    else:
        rows_j = np.arange(1, n - 1)
        hm, hp = h[:-1], h[1:]
        jm, jp = rows_j - 1, rows_j + 1
    a = 2.0 / (hm * (hm + hp))
    b = 2.0 / (hp * (hm + hp))
    c = -(a + b)
    proj = np.einsum("ji,jk->jik", nu[rows_j], nu[rows_j])

    rows, cols, vals = [], [], []
    for ci in range(2):
        for ck in range(2):
            pc = proj[:, ci, ck]
            for nbr, coef in ((jm, a), (rows_j, c), (jp, b)):
                rows.append(2 * rows_j + ci)
                cols.append(2 * nbr + ck)
                vals.append(-dt * coef * pc)
    for ci in range(2):
        rows.append(2 * rows_j + ci)
        cols.append(2 * rows_j + ci)
        vals.append(np.ones(len(rows_j)))
    rhs = x.copy()
    rhs[rows_j] += dt * lam[rows_j, None] * tau[rows_j]
    if not curve.closed:
        for j in (0, n - 1):
            for ci in range(2):
                rows.append(np.array([2 * j + ci]))
                cols.append(np.array([2 * j + ci]))
                vals.append(np.array([1.0]))
    mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(2 * n, 2 * n))
    return mat, rhs.reshape(-1)


def _remesh(network: Network, control: StepControl, frozen: Collection[int]) -> Tuple[Network, List[int]]:
    curves = list(network.curves)
    touched = []
    for i, c in enumerate(curves):
        if i in frozen or c.length < 8.0 * control.h_target and not c.closed:
            continue
        h = c.seg_lengths
        target = control.target_nodes(c.length)
        if h.max() / h.min() > control.remesh_ratio or c.n > 2 * target:
            curves[i] = resample_equidistant(c, target)
            touched.append(i)
    if not touched:
        return network, touched
    return network.with_curves(curves), touched


def step(state: FlowState, control: StepControl, dt_max: Optional[float] = None,
         frozen: Collection[int] = ()) -> FlowState:
    """
    Advance one linearly implicit step. `frozen` lists curves whose remeshing is
    suppressed (collapsing curves), `dt_max` caps the step to hit a stop time.
    """
    net = state.network
    dt = stable_dt(net, control)
    if dt_max is not None:
        dt = min(dt, dt_max)
    if dt < control.dt_floor:
        raise MeshCollapse(f"time step {dt:.3e} fell below the floor {control.dt_floor:.3e} at t={state.t:.9g}")

    speeds = _end_speeds(net, state)
    new_curves = []
    for i, curve in enumerate(net.curves):
        # speeds stay zero at fixed endpoints
        lam = tangential_velocity(curve, control.omega) if curve.closed else tangential_velocity(curve, control.omega, *speeds[i])
        mat, rhs = assemble_curve_system(curve, dt, lam)
        solved = spsolve(mat, rhs).reshape(-1, 2)
        if not np.all(np.isfinite(solved)):
            raise MeshCollapse(f"curve {i} solve produced non-finite nodes at t={state.t:.9g}")
        new_curves.append(Curve(nodes=solved, closed=curve.closed, lam=lam))

    old_positions = [np.asarray(j.position) for j in net.junctions]
    moved = project_junctions(net.with_curves(new_curves))
    moved, touched = _remesh(moved, control, frozen)
    if touched:
        logger.debug("remeshed curves %s at t=%.6g", touched, state.t + dt)
        moved = project_junctions(moved)

    report = validate_regular(moved, DEFAULT_ANGLE_TOL)
    if not report.passed:
        raise JunctionSolveFailed(f"Herring condition off by {report.max_deviation_deg:.3f} degrees after step {state.step_index + 1}")
    h_min = min_segment(moved)
    if h_min < 1e-3 * control.h_target:
        raise MeshCollapse(f"segment of length {h_min:.3e} below {1e-3 * control.h_target:.3e} at t={state.t + dt:.9g}")

    velocity = tuple((np.asarray(j.position) - p0) / dt for j, p0 in zip(moved.junctions, old_positions))
    return FlowState(network=moved, t=state.t + dt, dt=dt, step_index=state.step_index + 1, junction_velocity=velocity)
