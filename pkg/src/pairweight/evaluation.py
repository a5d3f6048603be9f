"""Recall@K over a full gallery similarity matrix, both directions.

The ground-truth match for query i is gallery item i. A query succeeds
at K when fewer than K gallery items rank strictly better than its true
match under descending score with lowest-index tie-breaking (the same
tie rule the losses use, so rankings are deterministic across platforms).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_square_scores


@dataclass(frozen=True)
class RecallReport:
    """Recall percentages keyed by K, one map per retrieval direction."""

    i2t: dict
    t2i: dict

    def as_dict(self) -> dict:
        out = {}
        for k in sorted(self.i2t):
            out[f"r{k}_i2t"] = self.i2t[k]
        for k in sorted(self.t2i):
            out[f"r{k}_t2i"] = self.t2i[k]
        return out


def recall_at_k(sim, ks=(1, 5, 10)) -> RecallReport:
    """Compute Recall@K for image->text (rows) and text->image (columns).

    Requires 1 <= K <= N for every requested K. Returns percentages in
    [0, 100] at full double precision; rounding is a display concern.
    """
    scores = sim.scores if hasattr(sim, "scores") else check_square_scores(sim)
    n = scores.shape[0]
    ks = [int(k) for k in ks]
    for k in ks:
        if k < 1:
            raise ValueError(f"K must be >= 1, got {k}")
        if k > n:
            raise ValueError(f"K={k} exceeds gallery size {n}")

    diag = scores.diagonal()
    idx = np.arange(n)

    # Rank of the true match in row i: gallery items beating it either
    # score strictly higher or tie with a lower index.
    better_i2t = (scores > diag[:, None]).sum(axis=1) + (
        (scores == diag[:, None]) & (idx[None, :] < idx[:, None])
    ).sum(axis=1)
    better_t2i = (scores > diag[None, :]).sum(axis=0) + (
        (scores == diag[None, :]) & (idx[:, None] < idx[None, :])
    ).sum(axis=0)

    i2t = {k: float((better_i2t < k).mean() * 100.0) for k in ks}
    t2i = {k: float((better_t2i < k).mean() * 100.0) for k in ks}
    return RecallReport(i2t=i2t, t2i=t2i)
