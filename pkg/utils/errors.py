# utils/errors.py
from typing import Any, Dict, Optional


class NetworkFlowError(Exception):
    """Root of every error raised by the simulator."""


class DegenerateCurve(NetworkFlowError):
    pass


class InvalidArgument(NetworkFlowError, ValueError):
    pass


class NotSimple(NetworkFlowError):
    pass


class UnsupportedTopology(NetworkFlowError):
    pass


class JunctionSolveFailed(NetworkFlowError):
    pass


class MeshCollapse(NetworkFlowError):
    pass


class NotEmbedded(NetworkFlowError):
    pass


class StepRejected(NetworkFlowError):
    def __init__(self, message: str, error_estimate: float = float("nan")):
        super().__init__(message)
        self.error_estimate = error_estimate


class SolverFailed(NetworkFlowError):
    def __init__(self, message: str, params: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.params = params or {}


class EmptyBlowup(NetworkFlowError):
    pass


class TransitionRefused(NetworkFlowError):
    pass


class ContinuationUnsupported(NetworkFlowError):
    pass


class ScenarioError(NetworkFlowError):
    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.field = field
        self.line = line
