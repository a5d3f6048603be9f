"""Pair-weighting metric learning for cross-modal retrieval.

Polynomial pair-weighting losses with informative-negative mining,
analytic gradients verified by finite differences, a deterministic
dual-encoder trainer, Recall@K evaluation, and a CLI for experiments.
"""

from .coefficients import (
    COEFFICIENT_PRESETS,
    DEFAULT_COEFFICIENTS,
    CoefficientReport,
    PolyCoefficients,
    poly_deriv_eval,
    poly_eval,
    validate_coefficients,
)
from .data import (
    FeaturePairSet,
    SyntheticSpec,
    generate_synthetic,
    load_features,
    save_features,
)
from .encoder import (
    AdamState,
    EncoderParams,
    NumericalError,
    adam_step,
    encode,
    encode_backward,
    init_adam,
    init_encoder_params,
    load_model,
    save_model,
)
from .estimator import DualEncoderMatcher
from .evaluation import RecallReport, recall_at_k
from .gradcheck import GradCheckReport, run_grad_check
from .losses import (
    LOSS_KINDS,
    LossDiagnostics,
    LossResult,
    LossSpec,
    avg_poly_forward_backward,
    loss_dispatch,
    max_poly_forward_backward,
    triplet_forward_backward,
)
from .mining import MiningMask, all_negatives_mask, mine
from .rng import make_rng
from .similarity import SimilarityMatrix, cosine_backward, cosine_forward
from .training import TrainResult, evaluate_pairs, train

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "COEFFICIENT_PRESETS",
    "CoefficientReport",
    "DEFAULT_COEFFICIENTS",
    "DualEncoderMatcher",
    "EncoderParams",
    "FeaturePairSet",
    "GradCheckReport",
    "LOSS_KINDS",
    "LossDiagnostics",
    "LossResult",
    "LossSpec",
    "MiningMask",
    "NumericalError",
    "PolyCoefficients",
    "RecallReport",
    "SimilarityMatrix",
    "SyntheticSpec",
    "TrainResult",
    "adam_step",
    "all_negatives_mask",
    "avg_poly_forward_backward",
    "cosine_backward",
    "cosine_forward",
    "encode",
    "encode_backward",
    "evaluate_pairs",
    "generate_synthetic",
    "init_adam",
    "init_encoder_params",
    "load_features",
    "load_model",
    "loss_dispatch",
    "make_rng",
    "max_poly_forward_backward",
    "mine",
    "poly_deriv_eval",
    "poly_eval",
    "recall_at_k",
    "run_grad_check",
    "save_features",
    "save_model",
    "train",
    "triplet_forward_backward",
    "validate_coefficients",
]
