"""Scikit-learn style front end for the dual-encoder matcher.

``DualEncoderMatcher`` wraps the functional training loop behind the
familiar estimator surface (constructor params, ``fit``/``transform``/
``score``, ``get_params``/``set_params``) so the matcher drops into
pipelines, grid searches and any other tooling that speaks the sklearn
protocol. ``X`` is the visual feature matrix and ``y`` the paired text
feature matrix; row i of each is a positive pair.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .coefficients import PolyCoefficients
from .data import FeaturePairSet, SPLIT_CODES
from .encoder import encode
from .evaluation import recall_at_k
from .losses import LossSpec
from .similarity import cosine_forward
from .training import train
from .validation import as_float_matrix, check_paired


class DualEncoderMatcher(BaseEstimator):
    """Cross-modal matcher trained with a pair-weighting loss.

    Parameters mirror the training CLI. When ``validation_fraction`` is
    positive, that trailing fraction of the fit rows is held out and
    scored with Recall@K after each epoch; the per-epoch records are
    available as ``log_`` after fitting.
    """

    def __init__(
        self,
        loss: str = "max_poly",
        pos_coeffs=(0.5, -0.7, 0.2),
        neg_coeffs=(0.03, -0.3, 1.2),
        mining_margin: float = 0.2,
        triplet_margin: float = 0.2,
        mining: bool = True,
        sim_domain=(0.0, 1.0),
        embed_dim: int = 16,
        epochs: int = 30,
        batch_size: int = 128,
        lr: float = 1e-3,
        lr_decay: float = 1.0,
        validation_fraction: float = 0.0,
        seed: int = 0,
    ):
        self.loss = loss
        self.pos_coeffs = pos_coeffs
        self.neg_coeffs = neg_coeffs
        self.mining_margin = mining_margin
        self.triplet_margin = triplet_margin
        self.mining = mining
        self.sim_domain = sim_domain
        self.embed_dim = embed_dim
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.lr_decay = lr_decay
        self.validation_fraction = validation_fraction
        self.seed = seed

    def _loss_spec(self) -> LossSpec:
        coeffs = PolyCoefficients(
            pos=tuple(self.pos_coeffs),
            neg=tuple(self.neg_coeffs),
            mining_margin=self.mining_margin,
            sim_domain=tuple(self.sim_domain),
        )
        return LossSpec(
            kind=self.loss,
            coefficients=coeffs,
            triplet_margin=self.triplet_margin,
            mining_enabled=self.mining,
        )

    def fit(self, X, y):
        """Train on paired features: X visual (N, d1), y text (N, d2)."""
        visual = as_float_matrix(X, "X")
        text = as_float_matrix(y, "y")
        check_paired(visual, text)
        n = visual.shape[0]
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")
        splits = np.zeros(n, dtype=np.uint8)
        if self.validation_fraction > 0.0:
            n_val = int(round(self.validation_fraction * n))
            if n_val:
                splits[n - n_val :] = SPLIT_CODES["val"]
        pairs = FeaturePairSet(visual=visual, text=text, splits=splits)

        result = train(
            pairs,
            self._loss_spec(),
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            seed=self.seed,
            embed_dim=self.embed_dim,
            lr_decay=self.lr_decay,
        )
        self.params_ = result.params
        self.log_ = result.log
        self.n_features_visual_ = visual.shape[1]
        self.n_features_text_ = text.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("this DualEncoderMatcher instance is not fitted yet")

    def transform(self, X):
        """Project visual features into the shared embedding space."""
        self._check_fitted()
        visual = as_float_matrix(X, "X")
        if visual.shape[1] != self.n_features_visual_:
            raise ValueError(
                f"X has {visual.shape[1]} features, expected {self.n_features_visual_}"
            )
        return visual @ self.params_.w_visual

    def encode_text(self, y):
        """Project text features into the shared embedding space."""
        self._check_fitted()
        text = as_float_matrix(y, "y")
        if text.shape[1] != self.n_features_text_:
            raise ValueError(
                f"y has {text.shape[1]} features, expected {self.n_features_text_}"
            )
        return text @ self.params_.w_text

    def pair_scores(self, X, y):
        """Full cosine score matrix between visual rows X and text rows y."""
        self._check_fitted()
        emb_v, emb_t = encode(self.params_, as_float_matrix(X, "X"), as_float_matrix(y, "y"))
        return cosine_forward(emb_v, emb_t).scores

    def score(self, X, y, k: int = 1) -> float:
        """Mean Recall@k across the two retrieval directions, in [0, 1]."""
        report = recall_at_k(self.pair_scores(X, y), ks=(k,))
        return (report.i2t[k] + report.t2i[k]) / 200.0

    def recall_report(self, X, y, ks=(1, 5, 10)):
        """Full Recall@K report on paired features."""
        return recall_at_k(self.pair_scores(X, y), ks=ks)
