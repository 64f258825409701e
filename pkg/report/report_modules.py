# report/report_modules.py
import math
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from singularity.detect import SingularEvent
from singularity.rates import BlowupFit
from singularity.transition import BoundaryLimit, TransitionRecord


def _num(v: float) -> Optional[float]:
    return float(v) if v is not None and math.isfinite(v) else None


class EventModel(BaseModel):
    kind: str
    t: float
    T_estimate: float
    location: Tuple[float, float]
    curves: List[int]
    loop: List[int] = []
    blowup_class: Optional[str] = None
    blowup_distance: Optional[float] = None
    anomalous: bool = False
    simultaneous: List[int] = []


class TransitionModel(BaseModel):
    kind: str
    t: float
    pre: Optional[str]
    post: Optional[str]
    pivot: Tuple[float, float]
    removed: List[int]
    inserted: List[int] = []
    delta: Optional[float] = None
    germ_residual: Optional[float] = None
    join_angle_deg: Optional[float] = None
    core: Optional[str] = None


class BoundaryLimitModel(BaseModel):
    t: float
    endpoint: str
    position: Tuple[float, float]
    two_point_angle_deg: float
    removed: List[int]
    restart_supported: bool = False


class BlowupFitModel(BaseModel):
    slope: float
    C: float
    C_linear: float
    samples: int
    accepted: bool


class RunSummary(BaseModel):
    scenario: str
    exit_code: int
    reason: str
    final_topology: Optional[str]
    t_final: float
    steps: int
    transitions: List[TransitionModel] = Field(default_factory=list)
    events: List[EventModel] = Field(default_factory=list)
    boundary_limits: List[BoundaryLimitModel] = Field(default_factory=list)
    blowup_fits: List[BlowupFitModel] = Field(default_factory=list)
    samples_digest: Optional[str] = None
    events_digest: Optional[str] = None
    artifacts: Dict[str, str] = Field(default_factory=dict)
    message: Optional[str] = None


def event_model(event: SingularEvent, distance: Optional[float] = None) -> EventModel:
    return EventModel(kind=event.kind.value, t=event.t, T_estimate=event.T_estimate,
                      location=tuple(map(float, event.location)), curves=list(event.curves), loop=list(event.loop),
                      blowup_class=event.blowup_class, blowup_distance=_num(distance) if distance is not None else None,
                      anomalous=event.anomalous, simultaneous=list(event.simultaneous))


def transition_model(record: TransitionRecord) -> TransitionModel:
    return TransitionModel(
        kind=record.kind, t=record.t,
        pre=record.pre.value if record.pre else None,
        post=record.post.value if record.post else None,
        pivot=tuple(map(float, record.pivot)), removed=list(record.removed), inserted=list(record.inserted),
        delta=_num(record.delta), germ_residual=_num(record.germ_residual), join_angle_deg=_num(record.join_angle_deg),
        core=record.core.kind if record.core else None,
    )


def boundary_model(limit: BoundaryLimit) -> BoundaryLimitModel:
    return BoundaryLimitModel(t=limit.t, endpoint=limit.endpoint, position=tuple(map(float, limit.position)),
                              two_point_angle_deg=limit.two_point_angle_deg, removed=list(limit.removed),
                              restart_supported=limit.restart_supported)


def fit_model(fit: BlowupFit) -> BlowupFitModel:
    return BlowupFitModel(slope=fit.slope, C=fit.C, C_linear=fit.C_linear, samples=fit.samples, accepted=fit.accepted)


def clean_json(obj: Any) -> Any:
    """Replace non-finite floats by None so the output stays valid JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    return obj
