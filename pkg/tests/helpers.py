import numpy as np

from diagnostics.quantities import DiagnosticsSample


def circle_nodes(radius: float = 1.0, n: int = 128, center=(0.0, 0.0)) -> np.ndarray:
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return np.asarray(center) + radius * np.column_stack([np.cos(t), np.sin(t)])


def fake_sample(t: float, max_abs_k: float, L: float = 1.0, int_k2: float = 0.0) -> DiagnosticsSample:
    return DiagnosticsSample(t=t, L=L, L_i=(L,), A_i=(), int_k2=int_k2, max_abs_k=max_abs_k)
