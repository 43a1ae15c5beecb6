"""Small shared linear-algebra helpers."""

import numpy as np

from .errors import FactorizationError


def chol_with_jitter(matrix: np.ndarray, label: str) -> np.ndarray:
    """Lower Cholesky factor, escalating diagonal jitter on failure.

    Starts at ``1e-8 * (1 + max diagonal)`` and multiplies by 10 for up to
    five attempts before raising :class:`FactorizationError`.
    """
    jitter = 1e-8 * (1.0 + float(np.max(np.diag(matrix))))
    attempt = np.asarray(matrix, dtype=float)
    for _ in range(5):
        try:
            return np.linalg.cholesky(attempt)
        except np.linalg.LinAlgError:
            attempt = attempt + jitter * np.eye(matrix.shape[0])
            jitter *= 10.0
    raise FactorizationError(
        f"{label} is not positive definite after jitter escalation:\n{matrix}"
    )
