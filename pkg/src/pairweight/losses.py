"""Hinged pair-weighting losses over a batch similarity matrix.

Three interchangeable objectives, each returning the batch loss value
together with its exact analytic gradient with respect to every score:

* ``triplet``: hardest-negative hinge in both retrieval directions,
  (1/N) sum_i [max_{j != i} S_ij - S_ii + margin]_+ plus the symmetric
  column-direction term.
* ``avg_poly``: per anchor, a hinge over the positive-pair polynomial at
  S_ii plus the mean of the negative polynomial over the anchor's mined
  negatives; averaged over anchors, both directions.
* ``max_poly``: as ``avg_poly`` but the mined-set mean is replaced by the
  negative polynomial at the hardest (maximum-score) mined negative.

Anchors whose mined set is empty already satisfy the mining margin and
contribute nothing: keeping a positive-only hinge would keep pushing
well-separated pairs with no contrast signal. A hinge sitting exactly at
zero is treated as inactive, and argmax ties resolve to the lowest index,
so results are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import (
    DEFAULT_COEFFICIENTS,
    PolyCoefficients,
    poly_deriv_eval,
    poly_eval,
    validate_coefficients,
)
from .mining import MiningMask, all_negatives_mask, mine
from .validation import check_square_scores

LOSS_KINDS = ("triplet", "avg_poly", "max_poly")


@dataclass(frozen=True)
class LossSpec:
    """Which loss to compute and with what hyperparameters."""

    kind: str = "max_poly"
    coefficients: PolyCoefficients = DEFAULT_COEFFICIENTS
    triplet_margin: float = 0.2
    mining_enabled: bool = True

    def validate(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}, expected one of {LOSS_KINDS}")
        if self.kind == "triplet":
            if not np.isfinite(self.triplet_margin) or self.triplet_margin < 0:
                raise ValueError(f"triplet margin must be >= 0, got {self.triplet_margin}")
            return
        report = validate_coefficients(self.coefficients)
        if not report.ok:
            raise ValueError(
                "invalid pair-weight coefficients: " + "; ".join(report.violations)
            )


@dataclass
class LossDiagnostics:
    """Per-batch bookkeeping: mined-negative counts and active hinges."""

    row_mined_counts: np.ndarray
    col_mined_counts: np.ndarray
    row_active_hinges: int
    col_active_hinges: int

    @property
    def mined_fraction(self) -> float:
        n = self.row_mined_counts.shape[0]
        total = 2 * n * (n - 1)
        mined = int(self.row_mined_counts.sum() + self.col_mined_counts.sum())
        return mined / total if total else 0.0


@dataclass
class LossResult:
    """Batch mean loss, the gradient dL/dS, and diagnostics."""

    value: float
    grad_scores: np.ndarray
    diagnostics: LossDiagnostics


def _scores_of(sim) -> np.ndarray:
    scores = sim.scores if hasattr(sim, "scores") else sim
    scores = check_square_scores(scores)
    if scores.shape[0] < 2:
        raise ValueError("loss computation needs at least 2 anchors")
    return scores


def _masks_for(scores: np.ndarray, spec: LossSpec) -> MiningMask:
    if spec.mining_enabled:
        return mine(scores, spec.coefficients.mining_margin)
    return all_negatives_mask(scores.shape[0])


def triplet_forward_backward(sim, margin: float) -> LossResult:
    """Hardest-negative triplet loss, value and exact subgradient.

    The subgradient is zero at inactive hinges (including hinges at
    exactly zero); ties in the per-anchor max go to the lowest index.
    """
    scores = _scores_of(sim)
    if not np.isfinite(margin) or margin < 0:
        raise ValueError(f"triplet margin must be >= 0, got {margin}")
    n = scores.shape[0]
    diag = scores.diagonal()
    idx = np.arange(n)
    grad = np.zeros_like(scores)
    off = np.where(~np.eye(n, dtype=bool), scores, -np.inf)

    value = 0.0
    active_counts = []
    for axis in (1, 0):
        hardest = off.max(axis=axis)
        arg = off.argmax(axis=axis)
        hinge = hardest - diag + margin
        active = hinge > 0.0
        value += hinge[active].sum() / n
        if axis == 1:
            grad[idx[active], arg[active]] += 1.0 / n
        else:
            grad[arg[active], idx[active]] += 1.0 / n
        grad[idx[active], idx[active]] -= 1.0 / n
        active_counts.append(int(active.sum()))

    pool = all_negatives_mask(n)
    diagnostics = LossDiagnostics(
        row_mined_counts=pool.row_counts,
        col_mined_counts=pool.col_counts,
        row_active_hinges=active_counts[0],
        col_active_hinges=active_counts[1],
    )
    return LossResult(value=float(value), grad_scores=grad, diagnostics=diagnostics)


def avg_poly_forward_backward(sim, spec: LossSpec) -> LossResult:
    """Averaged polynomial loss over each anchor's mined negatives.

    Per active hinge the gradient carries pos'(S_ii)/N on the diagonal
    and neg'(S_ij)/(N * mined-set size) on each mined negative, summed
    over the two retrieval directions.
    """
    if spec.kind != "avg_poly":
        raise ValueError(f"spec.kind must be 'avg_poly', got {spec.kind!r}")
    spec.validate()
    scores = _scores_of(sim)
    coeffs = spec.coefficients
    n = scores.shape[0]
    masks = _masks_for(scores, spec)
    diag = scores.diagonal()
    idx = np.arange(n)

    pos_diag = poly_eval(coeffs.pos, diag)
    dpos_diag = poly_deriv_eval(coeffs.pos, diag)
    neg_all = poly_eval(coeffs.neg, scores)
    dneg_all = poly_deriv_eval(coeffs.neg, scores)

    grad = np.zeros_like(scores)
    value = 0.0
    active_counts = []
    for mask, axis in ((masks.row_mask, 1), (masks.col_mask, 0)):
        counts = mask.sum(axis=axis)
        has = counts > 0
        safe = np.maximum(counts, 1)
        neg_mean = np.where(mask, neg_all, 0.0).sum(axis=axis) / safe
        hinge = np.where(has, pos_diag + neg_mean, 0.0)
        active = has & (hinge > 0.0)
        value += hinge[active].sum() / n
        weight = active / (n * safe)
        if axis == 1:
            grad += mask * dneg_all * weight[:, None]
        else:
            grad += mask * dneg_all * weight[None, :]
        grad[idx[active], idx[active]] += dpos_diag[active] / n
        active_counts.append(int(active.sum()))

    diagnostics = LossDiagnostics(
        row_mined_counts=masks.row_counts,
        col_mined_counts=masks.col_counts,
        row_active_hinges=active_counts[0],
        col_active_hinges=active_counts[1],
    )
    return LossResult(value=float(value), grad_scores=grad, diagnostics=diagnostics)


def max_poly_forward_backward(sim, spec: LossSpec) -> LossResult:
    """Polynomial loss on the hardest mined negative per anchor.

    Gradient flows only to the diagonal and the argmax mined entry of
    each active anchor; singleton mined sets make this identical to
    ``avg_poly``.
    """
    if spec.kind != "max_poly":
        raise ValueError(f"spec.kind must be 'max_poly', got {spec.kind!r}")
    spec.validate()
    scores = _scores_of(sim)
    coeffs = spec.coefficients
    n = scores.shape[0]
    masks = _masks_for(scores, spec)
    diag = scores.diagonal()
    idx = np.arange(n)

    pos_diag = poly_eval(coeffs.pos, diag)
    dpos_diag = poly_deriv_eval(coeffs.pos, diag)

    grad = np.zeros_like(scores)
    value = 0.0
    active_counts = []
    for mask, axis in ((masks.row_mask, 1), (masks.col_mask, 0)):
        has = mask.any(axis=axis)
        masked = np.where(mask, scores, -np.inf)
        hardest = np.where(has, masked.max(axis=axis), 0.0)
        arg = masked.argmax(axis=axis)
        hinge = np.where(has, pos_diag + poly_eval(coeffs.neg, hardest), 0.0)
        active = has & (hinge > 0.0)
        value += hinge[active].sum() / n
        dneg = poly_deriv_eval(coeffs.neg, hardest)
        if axis == 1:
            grad[idx[active], arg[active]] += dneg[active] / n
        else:
            grad[arg[active], idx[active]] += dneg[active] / n
        grad[idx[active], idx[active]] += dpos_diag[active] / n
        active_counts.append(int(active.sum()))

    diagnostics = LossDiagnostics(
        row_mined_counts=masks.row_counts,
        col_mined_counts=masks.col_counts,
        row_active_hinges=active_counts[0],
        col_active_hinges=active_counts[1],
    )
    return LossResult(value=float(value), grad_scores=grad, diagnostics=diagnostics)


def loss_dispatch(sim, spec: LossSpec) -> LossResult:
    """Route to the configured loss; uniform return shape for the trainer."""
    if spec.kind == "triplet":
        return triplet_forward_backward(sim, spec.triplet_margin)
    if spec.kind == "avg_poly":
        return avg_poly_forward_backward(sim, spec)
    if spec.kind == "max_poly":
        return max_poly_forward_backward(sim, spec)
    raise ValueError(f"unknown loss kind {spec.kind!r}, expected one of {LOSS_KINDS}")
