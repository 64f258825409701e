# flow/trajectory.py
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Set, Tuple

import numpy as np
from pydantic import BaseModel, Field

from diagnostics.density import gaussian_density
from diagnostics.embeddedness import embeddedness_measure, reflected_measure
from diagnostics.quantities import DiagnosticsSample, measure
from flow.engine import FlowState, StepControl, step
from network.model import Network
from network.topology import extract_loops
from singularity.detect import SingularEvent, Thresholds, curve_roles, detect

logger = logging.getLogger(__name__)


class StopCriteria(BaseModel):
    max_time: float = Field(1.0, gt=0.0)
    max_steps: int = Field(1_000_000, gt=0)
    stop_on_event: bool = True
    sample_every: Optional[float] = Field(None, gt=0.0)  # default max_time / 200


@dataclass
class FlowTrajectory:
    samples: List[DiagnosticsSample]
    final: FlowState
    reason: str  # max_time | max_steps | event
    event: Optional[SingularEvent] = None
    snapshots: List[FlowState] = field(default_factory=list, repr=False)
    steps: int = 0


def frozen_curves(network: Network, thresholds: Thresholds) -> Set[int]:
    """Curves close enough to a collapse that remeshing them would hide it."""
    lengths = [c.length for c in network.curves]
    roles = curve_roles(network)
    frozen = {i for i, (r, L) in enumerate(zip(roles, lengths)) if r in ("internal", "boundary") and L < 2.0 * thresholds.eps_len}
    for lp in extract_loops(network):
        if lp.area < 4.0 * thresholds.eps_area:
            frozen.update(lp.curve_ids)
    return frozen


def sample(state: FlowState, probes: Sequence[Tuple[Tuple[float, float], float]] = (),
           embeddedness_stride: int = 0) -> DiagnosticsSample:
    """
    Diagnostics at the current time. Each probe (x0, t0) adds the Gaussian
    density, NaN once t >= t0; a positive stride adds E and the reflected Pi.
    """
    net = state.network
    theta = [gaussian_density(net, x0, t0, state.t) if state.t < t0 else float("nan") for x0, t0 in probes]
    E = Pi = float("nan")
    if embeddedness_stride > 0:
        E = embeddedness_measure(net, embeddedness_stride).E
        Pi = reflected_measure(net, embeddedness_stride)
    return measure(net, state.t, theta, E, Pi)


def run_until(state: FlowState, control: StepControl, stop: StopCriteria,
              thresholds: Optional[Thresholds] = None,
              probes: Sequence[Tuple[Tuple[float, float], float]] = (),
              embeddedness_stride: int = 0, keep_snapshots: bool = False,
              on_sample: Optional[Callable[[FlowState, DiagnosticsSample], None]] = None) -> FlowTrajectory:
    """
    Step until max_time, max_steps or (with stop_on_event) the first singular
    event. Samples are taken at t0, every `sample_every`, at the event and at
    the end; the flow is never stepped past the event.
    """
    thresholds = (thresholds or Thresholds()).resolve(control.h_target)
    every = stop.sample_every or stop.max_time / 200.0
    t_end = state.t + stop.max_time
    samples: List[DiagnosticsSample] = []
    snapshots: List[FlowState] = []

    def record(s: FlowState) -> None:
        d = sample(s, probes, embeddedness_stride)
        samples.append(d)
        if keep_snapshots:
            snapshots.append(s)
        if on_sample is not None:
            on_sample(s, d)

    record(state)
    next_sample = state.t + every
    steps = 0
    reason = "max_time"
    event = None
    while True:
        if state.t >= t_end - 1e-15:
            break
        if steps >= stop.max_steps:
            reason = "max_steps"
            break
        state = step(state, control, dt_max=t_end - state.t, frozen=frozen_curves(state.network, thresholds))
        steps += 1
        found = detect(state, thresholds, samples)
        if found is not None:
            event = event or found
            if stop.stop_on_event:
                event, reason = found, "event"
                logger.info("%s at t=%.9g (estimated T=%.9g) after %d steps", found.kind.value, found.t, found.T_estimate, steps)
                break
        if state.t >= next_sample:
            record(state)
            next_sample += every * (np.floor((state.t - next_sample) / every) + 1.0)

    if not samples or samples[-1].t != state.t:
        record(state)
    return FlowTrajectory(samples=samples, final=state, reason=reason, event=event, snapshots=snapshots, steps=steps)
