"""Deterministic training loop for the dual encoder.

One epoch shuffles the training rows, walks full batches (a trailing
incomplete batch is dropped so every step sees a stable batch
composition), and runs encode -> cosine -> loss -> backward -> Adam.
After each epoch the validation split is scored with Recall@K. Given the
same dataset, loss spec and seed the loop is bit-reproducible: parameter
init and batch shuffles are the only random draws, in a fixed order, and
no draw depends on the loss kind, so runs with matched seeds see
identical batches.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import FeaturePairSet
from .encoder import (
    AdamState,
    EncoderParams,
    NumericalError,
    adam_step,
    encode,
    encode_backward,
    init_adam,
    init_encoder_params,
)
from .evaluation import recall_at_k
from .losses import LossSpec, loss_dispatch
from .rng import make_rng
from .similarity import cosine_backward, cosine_forward

DEFAULT_KS = (1, 5, 10)


@dataclass
class TrainResult:
    """Final parameters plus the per-epoch JSON-ready log records."""

    params: EncoderParams
    log: list
    adam: Optional[AdamState] = None


def evaluate_pairs(params: EncoderParams, pairs: FeaturePairSet, split: str, ks=DEFAULT_KS):
    """Recall@K of ``params`` on one split of ``pairs`` (both directions)."""
    idx = pairs.indices(split)
    if idx.size < 2:
        raise ValueError(f"split {split!r} has {idx.size} rows; need at least 2 to evaluate")
    emb_v, emb_t = encode(params, pairs.visual[idx], pairs.text[idx])
    sim = cosine_forward(emb_v, emb_t)
    usable = [k for k in ks if k <= idx.size]
    return recall_at_k(sim, usable)


def _epoch_record(epoch: int, mean_loss: float, report, mined_fraction: float, ks) -> dict:
    rec = {"epoch": epoch, "mean_loss": mean_loss}
    for k in ks:
        rec[f"r{k}_i2t"] = report.i2t.get(k) if report is not None else None
    for k in ks:
        rec[f"r{k}_t2i"] = report.t2i.get(k) if report is not None else None
    rec["mined_fraction"] = mined_fraction
    return rec


def train(
    dataset: FeaturePairSet,
    spec: LossSpec,
    epochs: int,
    batch_size: int,
    lr: float,
    seed: int,
    embed_dim: int = 16,
    lr_decay: float = 1.0,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    ks=DEFAULT_KS,
    on_epoch=None,
) -> TrainResult:
    """Train the linear dual encoder against ``spec``.

    Returns the final parameters and one log record per epoch. ``lr_decay``
    multiplies the learning rate once per epoch (1.0 disables decay).
    ``on_epoch``, when given, receives each record as it is produced.
    """
    spec.validate()
    if dataset.n == 0:
        raise ValueError("dataset is empty")
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    if batch_size < 2:
        raise ValueError(f"batch_size must be >= 2, got {batch_size}")
    if not np.isfinite(lr_decay) or lr_decay <= 0:
        raise ValueError(f"lr_decay must be > 0, got {lr_decay}")

    rng = make_rng(seed)
    params = init_encoder_params(dataset.d1, dataset.d2, embed_dim, rng)
    adam = init_adam(params, lr, beta1=beta1, beta2=beta2, eps=eps)

    train_idx = dataset.indices("train")
    val_idx = dataset.indices("val")
    n_batches = train_idx.size // batch_size
    if epochs > 0 and n_batches == 0:
        raise ValueError(
            f"training split has {train_idx.size} rows, fewer than one batch of {batch_size}"
        )

    log = []
    for epoch in range(1, epochs + 1):
        perm = rng.permutation(train_idx.size)
        epoch_lr = lr * lr_decay ** (epoch - 1)
        losses = np.empty(n_batches)
        mined = np.empty(n_batches)
        for b in range(n_batches):
            rows = train_idx[perm[b * batch_size : (b + 1) * batch_size]]
            emb_v, emb_t = encode(params, dataset.visual[rows], dataset.text[rows])
            if not (np.all(np.isfinite(emb_v)) and np.all(np.isfinite(emb_t))):
                raise NumericalError(f"non-finite embeddings at epoch {epoch}, batch {b}")
            sim = cosine_forward(emb_v, emb_t)
            result = loss_dispatch(sim, spec)
            if not np.isfinite(result.value):
                raise NumericalError(f"non-finite loss at epoch {epoch}, batch {b}")
            losses[b] = result.value
            mined[b] = result.diagnostics.mined_fraction
            g_emb_v, g_emb_t = cosine_backward(sim, result.grad_scores)
            g_wv, g_wt = encode_backward(
                params, dataset.visual[rows], dataset.text[rows], g_emb_v, g_emb_t
            )
            params, adam = adam_step(adam, params, g_wv, g_wt, lr=epoch_lr)
        if not (np.all(np.isfinite(params.w_visual)) and np.all(np.isfinite(params.w_text))):
            raise NumericalError(f"non-finite encoder parameters after epoch {epoch}")

        report = evaluate_pairs(params, dataset, "val", ks) if val_idx.size >= 2 else None
        record = _epoch_record(epoch, float(losses.mean()), report, float(mined.mean()), ks)
        log.append(record)
        if on_epoch is not None:
            on_epoch(record)

    return TrainResult(params=params, log=log, adam=adam)
