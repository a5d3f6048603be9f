"""Batch cosine similarity with an exact analytic backward pass.

Scores are plain cosine of the two embedding batches; the forward pass
caches the row-normalized embeddings so the backward pass can apply the
normalization Jacobian (I - u u^T)/||u|| per row and return gradients
with respect to the raw, pre-normalization embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_float_matrix, check_paired, check_row_norms


@dataclass
class SimilarityMatrix:
    """Cosine scores for a batch plus the caches needed for backward.

    ``scores[i, j]`` is the similarity between visual row i and text row
    j; the diagonal holds the positive-pair scores.
    """

    scores: np.ndarray
    visual_unit: np.ndarray
    text_unit: np.ndarray
    visual_norms: np.ndarray
    text_norms: np.ndarray

    @property
    def n(self) -> int:
        return self.scores.shape[0]


def cosine_forward(visual, text) -> SimilarityMatrix:
    """Compute scores[i, j] = <v_i/||v_i||, t_j/||t_j||>.

    Both batches must have the same row count (>= 2) and embedding
    dimension. Rows with (near-)zero norm are rejected.
    """
    v = as_float_matrix(visual, "visual embeddings")
    t = as_float_matrix(text, "text embeddings")
    check_paired(v, t)
    if v.shape[1] != t.shape[1]:
        raise ValueError(
            f"embedding dimensions differ: visual {v.shape[1]}, text {t.shape[1]}"
        )
    if v.shape[0] < 2:
        raise ValueError("similarity batches need at least 2 rows")
    v_norms = check_row_norms(v, "visual embeddings")
    t_norms = check_row_norms(t, "text embeddings")
    v_unit = v / v_norms[:, None]
    t_unit = t / t_norms[:, None]
    scores = v_unit @ t_unit.T
    return SimilarityMatrix(
        scores=scores,
        visual_unit=v_unit,
        text_unit=t_unit,
        visual_norms=v_norms,
        text_norms=t_norms,
    )


def cosine_backward(sim: SimilarityMatrix, grad_scores):
    """Backpropagate d(sum_ij grad_scores[i,j] * scores[i,j]) to raw embeddings.

    Returns ``(grad_visual, grad_text)`` of shapes (N, d). For each row u
    with unit vector u_hat, the chain rule through normalization is
    g_raw = (g_unit - (g_unit . u_hat) u_hat) / ||u||.
    """
    g = as_float_matrix(grad_scores, "grad_scores")
    if g.shape != sim.scores.shape:
        raise ValueError(
            f"grad_scores shape {g.shape} does not match scores shape {sim.scores.shape}"
        )
    g_v_unit = g @ sim.text_unit
    g_t_unit = g.T @ sim.visual_unit
    grad_visual = (
        g_v_unit - (g_v_unit * sim.visual_unit).sum(axis=1, keepdims=True) * sim.visual_unit
    ) / sim.visual_norms[:, None]
    grad_text = (
        g_t_unit - (g_t_unit * sim.text_unit).sum(axis=1, keepdims=True) * sim.text_unit
    ) / sim.text_norms[:, None]
    return grad_visual, grad_text
