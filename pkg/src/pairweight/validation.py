"""Input validation helpers shared across the package.

These keep array checking consistent between the functional API, the
estimator, and the CLI: everything is coerced to 64-bit float, shapes are
checked eagerly, and non-finite values are rejected with a named error.
"""

from __future__ import annotations

import numpy as np

ZERO_NORM_FLOOR = 1e-12


class NumericalError(RuntimeError):
    """Raised when a computation produces non-finite numbers."""


def as_float_matrix(x, name: str = "array") -> np.ndarray:
    """Coerce ``x`` to a finite 2-D float64 array or raise ``ValueError``."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_paired(visual: np.ndarray, text: np.ndarray) -> None:
    """Require one text row per visual row."""
    if visual.shape[0] != text.shape[0]:
        raise ValueError(
            f"paired batches must have equal row counts, got {visual.shape[0]} and {text.shape[0]}"
        )


def check_square_scores(scores, name: str = "scores") -> np.ndarray:
    """Coerce to a square float64 score matrix."""
    arr = as_float_matrix(scores, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def check_row_norms(embeddings: np.ndarray, name: str = "embeddings") -> np.ndarray:
    """Return per-row L2 norms, rejecting (near-)zero rows.

    Zero rows are rejected rather than epsilon-patched: silently clamping
    the norm changes gradients and hides upstream data bugs. Norms that
    overflow to inf raise ``NumericalError`` instead, since the inputs
    were finite and the failure is arithmetic.
    """
    norms = np.linalg.norm(embeddings, axis=1)
    if not np.all(np.isfinite(norms)):
        raise NumericalError(f"{name} row norms overflow to non-finite values")
    if np.any(norms < ZERO_NORM_FLOOR):
        bad = int(np.argmin(norms))
        raise ValueError(f"{name} row {bad} has norm below {ZERO_NORM_FLOOR:g}")
    return norms
