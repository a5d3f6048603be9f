"""Finite-difference verification of every analytic gradient path.

Three components are checked independently: the similarity backward pass
(gradients with respect to raw embeddings), each loss's gradient with
respect to the score matrix, and the full encoder chain (loss gradient
with respect to the projection matrices). Loss instances are rejection
sampled so that every hinge, mining threshold and argmax gap sits at
least ``BOUNDARY_MARGIN`` away from its switching point; central
differences with step 1e-5 then stay on one smooth piece.

Relative error uses the symmetric form |a - f| / (|a| + |f| + 1e-3): the
regulariser keeps genuinely-zero entries from registering finite-
difference noise while leaving real discrepancies visible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import poly_eval
from .encoder import EncoderParams, encode, encode_backward
from .losses import LossSpec, loss_dispatch
from .mining import all_negatives_mask, mine
from .rng import make_rng
from .similarity import cosine_backward, cosine_forward

BOUNDARY_MARGIN = 1e-3
FD_STEP = 1e-5
LOSS_TOL = 1e-5
SIMILARITY_TOL = 1e-5
ENCODER_TOL = 1e-4
_REL_REG = 1e-3


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst-case symmetric relative error between two gradient arrays."""
    a = np.asarray(analytic, dtype=np.float64)
    f = np.asarray(numeric, dtype=np.float64)
    return float(np.max(np.abs(a - f) / (np.abs(a) + np.abs(f) + _REL_REG))) if a.size else 0.0


@dataclass(frozen=True)
class ComponentResult:
    name: str
    trials: int
    max_rel_err: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tolerance


@dataclass(frozen=True)
class GradCheckReport:
    loss_kind: str
    components: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.components)


def _top_gap(values: np.ndarray) -> float:
    """Gap between the two largest entries; inf when fewer than two."""
    if values.size < 2:
        return np.inf
    top = np.partition(values, values.size - 2)[-2:]
    return float(top[1] - top[0])


def min_boundary_distance(scores: np.ndarray, spec: LossSpec) -> float:
    """Distance of an instance to the nearest gradient discontinuity.

    Covers mining thresholds, hinge activations and per-anchor argmax
    ties for the configured loss kind.
    """
    n = scores.shape[0]
    diag = scores.diagonal()
    off = ~np.eye(n, dtype=bool)
    dist = np.inf

    if spec.kind == "triplet":
        for axis in (1, 0):
            masked = np.where(off, scores, -np.inf)
            hardest = masked.max(axis=axis)
            hinge = hardest - diag + spec.triplet_margin
            dist = min(dist, float(np.min(np.abs(hinge))))
            for k in range(n):
                vals = masked[k, :] if axis == 1 else masked[:, k]
                dist = min(dist, _top_gap(vals[np.isfinite(vals)]))
        return dist

    coeffs = spec.coefficients
    if spec.mining_enabled:
        margin = coeffs.mining_margin
        row_gap = np.abs(scores - (diag[:, None] - margin))[off]
        col_gap = np.abs(scores - (diag[None, :] - margin))[off]
        dist = min(dist, float(row_gap.min()), float(col_gap.min()))
        masks = mine(scores, margin)
    else:
        masks = all_negatives_mask(n)

    pos_diag = poly_eval(coeffs.pos, diag)
    neg_all = poly_eval(coeffs.neg, scores)
    for mask, axis in ((masks.row_mask, 1), (masks.col_mask, 0)):
        counts = mask.sum(axis=axis)
        has = counts > 0
        if spec.kind == "avg_poly":
            hinge = pos_diag + np.where(mask, neg_all, 0.0).sum(axis=axis) / np.maximum(counts, 1)
        else:
            masked = np.where(mask, scores, -np.inf)
            hardest = np.where(has, masked.max(axis=axis), 0.0)
            hinge = pos_diag + poly_eval(coeffs.neg, hardest)
            for k in range(n):
                vals = masked[k, :] if axis == 1 else masked[:, k]
                dist = min(dist, _top_gap(vals[np.isfinite(vals)]))
        if has.any():
            dist = min(dist, float(np.min(np.abs(hinge[has]))))
    return dist


def sample_safe_scores(rng: np.random.Generator, spec: LossSpec, max_tries: int = 1000) -> np.ndarray:
    """Draw a random score matrix at least BOUNDARY_MARGIN from any boundary."""
    for _ in range(max_tries):
        n = int(rng.integers(3, 9))
        scores = rng.uniform(-0.9, 0.9, size=(n, n))
        if min_boundary_distance(scores, spec) >= BOUNDARY_MARGIN:
            return scores
    raise RuntimeError("could not sample a boundary-safe score matrix")


def _fd_wrt_array(func, base: np.ndarray, step: float) -> np.ndarray:
    grad = np.zeros_like(base)
    it = np.nditer(base, flags=["multi_index"])
    for _ in it:
        ix = it.multi_index
        bumped = base.copy()
        bumped[ix] = base[ix] + step
        f_plus = func(bumped)
        bumped[ix] = base[ix] - step
        f_minus = func(bumped)
        grad[ix] = (f_plus - f_minus) / (2.0 * step)
    return grad


def check_loss_gradients(
    loss_kind: str, trials: int, seed: int, step: float = FD_STEP, inject_bug: bool = False
) -> ComponentResult:
    """Analytic dL/dS versus central differences on safe instances."""
    spec = LossSpec(kind=loss_kind)
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(trials):
        scores = sample_safe_scores(rng, spec)
        result = loss_dispatch(scores, spec)
        analytic = result.grad_scores
        if inject_bug:
            analytic = analytic.copy()
            analytic[0, 0] += 1e-3
        numeric = _fd_wrt_array(lambda s: loss_dispatch(s, spec).value, scores, step)
        worst = max(worst, relative_error(analytic, numeric))
    return ComponentResult("loss", trials, worst, LOSS_TOL)


def check_similarity_backward(
    trials: int, seed: int, step: float = FD_STEP, inject_bug: bool = False
) -> ComponentResult:
    """Cosine backward versus central differences of sum(grad * scores)."""
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        d = int(rng.integers(2, 7))
        # Resample rows that land too close to the zero-norm guard.
        while True:
            visual = rng.standard_normal((n, d))
            text = rng.standard_normal((n, d))
            norms = (np.linalg.norm(visual, axis=1).min(), np.linalg.norm(text, axis=1).min())
            if min(norms) >= 0.3:
                break
        grad_scores = rng.uniform(-1.0, 1.0, size=(n, n))

        sim = cosine_forward(visual, text)
        g_v, g_t = cosine_backward(sim, grad_scores)
        if inject_bug:
            g_v = g_v.copy()
            g_v[0, 0] += 1e-3

        def scalar(v=None, t=None):
            s = cosine_forward(visual if v is None else v, text if t is None else t)
            return float((grad_scores * s.scores).sum())

        fd_v = _fd_wrt_array(lambda v: scalar(v=v), visual, step)
        fd_t = _fd_wrt_array(lambda t: scalar(t=t), text, step)
        worst = max(worst, relative_error(g_v, fd_v), relative_error(g_t, fd_t))
    return ComponentResult("similarity", trials, worst, SIMILARITY_TOL)


def _sample_safe_pipeline(rng: np.random.Generator, spec: LossSpec, max_tries: int = 1000):
    for _ in range(max_tries):
        n = int(rng.integers(3, 7))
        d1 = int(rng.integers(2, 6))
        d2 = int(rng.integers(2, 6))
        d = int(rng.integers(2, 5))
        visual = rng.uniform(-1.0, 1.0, size=(n, d1))
        text = rng.uniform(-1.0, 1.0, size=(n, d2))
        params = EncoderParams(
            w_visual=rng.uniform(-0.8, 0.8, size=(d1, d)),
            w_text=rng.uniform(-0.8, 0.8, size=(d2, d)),
        )
        emb_v, emb_t = encode(params, visual, text)
        if min(np.linalg.norm(emb_v, axis=1).min(), np.linalg.norm(emb_t, axis=1).min()) < 0.5:
            continue
        sim = cosine_forward(emb_v, emb_t)
        if min_boundary_distance(sim.scores, spec) >= BOUNDARY_MARGIN:
            return visual, text, params
    raise RuntimeError("could not sample a boundary-safe pipeline instance")


def check_encoder_chain(
    loss_kind: str, trials: int, seed: int, step: float = FD_STEP, inject_bug: bool = False
) -> ComponentResult:
    """End-to-end dL/dW versus central differences through the pipeline."""
    spec = LossSpec(kind=loss_kind)
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(trials):
        visual, text, params = _sample_safe_pipeline(rng, spec)

        def loss_of(w_v, w_t):
            emb_v, emb_t = encode(EncoderParams(w_visual=w_v, w_text=w_t), visual, text)
            return loss_dispatch(cosine_forward(emb_v, emb_t), spec).value

        emb_v, emb_t = encode(params, visual, text)
        sim = cosine_forward(emb_v, emb_t)
        result = loss_dispatch(sim, spec)
        g_emb_v, g_emb_t = cosine_backward(sim, result.grad_scores)
        g_wv, g_wt = encode_backward(params, visual, text, g_emb_v, g_emb_t)
        if inject_bug:
            g_wv = g_wv.copy()
            g_wv[0, 0] += 1e-3

        fd_wv = _fd_wrt_array(lambda w: loss_of(w, params.w_text), params.w_visual, step)
        fd_wt = _fd_wrt_array(lambda w: loss_of(params.w_visual, w), params.w_text, step)
        worst = max(worst, relative_error(g_wv, fd_wv), relative_error(g_wt, fd_wt))
    return ComponentResult("encoder", trials, worst, ENCODER_TOL)


def run_grad_check(
    loss_kind: str, trials: int = 100, seed: int = 0, step: float = FD_STEP, inject_bug: bool = False
) -> GradCheckReport:
    """Run all three components for one loss kind."""
    components = (
        check_similarity_backward(trials, seed, step, inject_bug),
        check_loss_gradients(loss_kind, trials, seed + 1, step, inject_bug),
        check_encoder_chain(loss_kind, trials, seed + 2, step, inject_bug),
    )
    return GradCheckReport(loss_kind=loss_kind, components=components)
