"""Informative negative-pair selection.

A negative pair is informative when its score comes within ``margin`` of
the anchor's positive score: strictly S_ij > S_ii - margin for the
visual anchor (row direction) and S_ij > S_jj - margin for the text
anchor (column direction). Ties at exactly the threshold are excluded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_square_scores


@dataclass
class MiningMask:
    """Boolean informative-pair masks, diagonal always False.

    ``row_mask[i, j]`` marks text j as a mined negative for visual anchor
    i; ``col_mask[i, j]`` marks visual i as a mined negative for text
    anchor j.
    """

    row_mask: np.ndarray
    col_mask: np.ndarray

    @property
    def row_counts(self) -> np.ndarray:
        return self.row_mask.sum(axis=1)

    @property
    def col_counts(self) -> np.ndarray:
        return self.col_mask.sum(axis=0)


def _scores_of(sim) -> np.ndarray:
    return sim.scores if hasattr(sim, "scores") else check_square_scores(sim)


def mine(sim, margin: float) -> MiningMask:
    """Select informative negatives in both retrieval directions.

    ``sim`` may be a SimilarityMatrix or a raw square score array; N >= 2
    and margin >= 0 are required. O(N^2).
    """
    scores = _scores_of(sim)
    if scores.shape[0] < 2:
        raise ValueError("mining needs at least 2 anchors")
    if not np.isfinite(margin) or margin < 0:
        raise ValueError(f"mining margin must be >= 0, got {margin}")
    diag = scores.diagonal()
    row_mask = scores > (diag[:, None] - margin)
    col_mask = scores > (diag[None, :] - margin)
    np.fill_diagonal(row_mask, False)
    np.fill_diagonal(col_mask, False)
    return MiningMask(row_mask=row_mask, col_mask=col_mask)


def all_negatives_mask(n: int) -> MiningMask:
    """Mining-disabled pool: every off-diagonal pair in both directions."""
    off = ~np.eye(n, dtype=bool)
    return MiningMask(row_mask=off, col_mask=off.copy())
