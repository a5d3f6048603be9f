"""Linear dual encoder, Adam optimizer state, and model file I/O.

The encoder is deliberately minimal: one linear projection per modality
into a shared embedding space. It exists to train and exercise the loss
functions, not to compete with real feature extractors.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from .validation import NumericalError, as_float_matrix

MODEL_MAGIC = b"XMD1"


@dataclass(frozen=True)
class EncoderParams:
    """Projection matrices W_v (d1 x d) and W_t (d2 x d)."""

    w_visual: np.ndarray
    w_text: np.ndarray

    @property
    def embed_dim(self) -> int:
        return self.w_visual.shape[1]


def init_encoder_params(d1: int, d2: int, embed_dim: int, rng: np.random.Generator) -> EncoderParams:
    """Fan-in scaled uniform init, entries i.i.d. U[-1/sqrt(d_in), 1/sqrt(d_in)].

    Draw order (visual then text) is part of the determinism contract.
    """
    if min(d1, d2, embed_dim) < 1:
        raise ValueError("encoder dimensions must be positive")
    bound_v = 1.0 / np.sqrt(d1)
    bound_t = 1.0 / np.sqrt(d2)
    w_v = rng.uniform(-bound_v, bound_v, size=(d1, embed_dim))
    w_t = rng.uniform(-bound_t, bound_t, size=(d2, embed_dim))
    return EncoderParams(w_visual=w_v, w_text=w_t)


def encode(params: EncoderParams, visual_raw, text_raw):
    """Project raw features into the shared space: X_v @ W_v, X_t @ W_t."""
    v = as_float_matrix(visual_raw, "visual features")
    t = as_float_matrix(text_raw, "text features")
    if v.shape[1] != params.w_visual.shape[0]:
        raise ValueError(
            f"visual features have {v.shape[1]} columns, encoder expects {params.w_visual.shape[0]}"
        )
    if t.shape[1] != params.w_text.shape[0]:
        raise ValueError(
            f"text features have {t.shape[1]} columns, encoder expects {params.w_text.shape[0]}"
        )
    return v @ params.w_visual, t @ params.w_text


def encode_backward(params: EncoderParams, visual_raw, text_raw, grad_visual_embed, grad_text_embed):
    """Parameter gradients of the linear projections: dW = X^T @ dE."""
    v = as_float_matrix(visual_raw, "visual features")
    t = as_float_matrix(text_raw, "text features")
    g_v = as_float_matrix(grad_visual_embed, "grad_visual_embed")
    g_t = as_float_matrix(grad_text_embed, "grad_text_embed")
    if g_v.shape != (v.shape[0], params.w_visual.shape[1]):
        raise ValueError(f"grad_visual_embed has shape {g_v.shape}, expected {(v.shape[0], params.w_visual.shape[1])}")
    if g_t.shape != (t.shape[0], params.w_text.shape[1]):
        raise ValueError(f"grad_text_embed has shape {g_t.shape}, expected {(t.shape[0], params.w_text.shape[1])}")
    return v.T @ g_v, t.T @ g_t


@dataclass(frozen=True)
class AdamState:
    """Bias-corrected Adam accumulators for both projection matrices."""

    m_visual: np.ndarray
    v_visual: np.ndarray
    m_text: np.ndarray
    v_text: np.ndarray
    step: int
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(params: EncoderParams, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    if not np.isfinite(lr) or lr <= 0:
        raise ValueError(f"learning rate must be > 0, got {lr}")
    return AdamState(
        m_visual=np.zeros_like(params.w_visual),
        v_visual=np.zeros_like(params.w_visual),
        m_text=np.zeros_like(params.w_text),
        v_text=np.zeros_like(params.w_text),
        step=0,
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def adam_step(state: AdamState, params: EncoderParams, grad_visual, grad_text, lr: float = None):
    """One bias-corrected Adam update; returns (new_params, new_state).

    Inputs are never mutated. ``lr`` overrides the state's base rate for
    this step (used for step decay).
    """
    g_v = np.asarray(grad_visual, dtype=np.float64)
    g_t = np.asarray(grad_text, dtype=np.float64)
    if g_v.shape != params.w_visual.shape or g_t.shape != params.w_text.shape:
        raise ValueError("gradient shapes do not match parameter shapes")
    if not (np.all(np.isfinite(g_v)) and np.all(np.isfinite(g_t))):
        raise NumericalError("non-finite gradient entries in Adam update")
    rate = state.lr if lr is None else lr
    t = state.step + 1
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t

    m_v = state.beta1 * state.m_visual + (1.0 - state.beta1) * g_v
    v_v = state.beta2 * state.v_visual + (1.0 - state.beta2) * g_v * g_v
    m_t = state.beta1 * state.m_text + (1.0 - state.beta1) * g_t
    v_t = state.beta2 * state.v_text + (1.0 - state.beta2) * g_t * g_t

    w_v = params.w_visual - rate * (m_v / bc1) / (np.sqrt(v_v / bc2) + state.eps)
    w_t = params.w_text - rate * (m_t / bc1) / (np.sqrt(v_t / bc2) + state.eps)

    new_params = EncoderParams(w_visual=w_v, w_text=w_t)
    new_state = replace(state, m_visual=m_v, v_visual=v_v, m_text=m_t, v_text=v_t, step=t)
    return new_params, new_state


def save_model(params: EncoderParams, path) -> None:
    """Write the deterministic binary model file (magic XMD1, f64 payload)."""
    d1, d = params.w_visual.shape
    d2 = params.w_text.shape[0]
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<III", d1, d2, d))
        fh.write(params.w_visual.astype("<f8", copy=False).tobytes(order="C"))
        fh.write(params.w_text.astype("<f8", copy=False).tobytes(order="C"))


def load_model(path) -> EncoderParams:
    """Read a model file written by ``save_model``; validates layout."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MODEL_MAGIC:
        raise ValueError(f"{path}: bad magic, not a model file")
    if len(blob) < 16:
        raise ValueError(f"{path}: truncated header")
    d1, d2, d = struct.unpack("<III", blob[4:16])
    expected = 16 + 8 * (d1 * d + d2 * d)
    if len(blob) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for dims ({d1}, {d2}, {d}), got {len(blob)}")
    offset = 16
    w_v = np.frombuffer(blob, dtype="<f8", count=d1 * d, offset=offset).reshape(d1, d).copy()
    offset += 8 * d1 * d
    w_t = np.frombuffer(blob, dtype="<f8", count=d2 * d, offset=offset).reshape(d2, d).copy()
    if not (np.all(np.isfinite(w_v)) and np.all(np.isfinite(w_t))):
        raise ValueError(f"{path}: model contains non-finite values")
    return EncoderParams(w_visual=w_v, w_text=w_t)
