"""Synthetic paired-feature generation and feature-file I/O.

The on-disk format (magic ``XMF1``) is deliberately simple and language
neutral: little-endian u32 header (N, d1, d2), the visual then text
feature blocks as little-endian IEEE-754 32-bit floats, one split-tag
byte per row (0=train, 1=val, 2=test), then one little-endian u32 class
id per row (0xFFFFFFFF when class ids are absent). Features are stored
at 32-bit precision for economy and promoted to 64-bit on load, so the
computation path stays at double precision.

Hand-authored fixtures can instead be loaded from CSV with the header
``v_0..v_{d1-1},t_0..t_{d2-1}``; CSV rows default to the train split.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rng import make_rng
from .validation import as_float_matrix

FEATURE_MAGIC = b"XMF1"
NO_CLASS = 0xFFFFFFFF

SPLIT_CODES = {"train": 0, "val": 1, "test": 2}
SPLIT_NAMES = {v: k for k, v in SPLIT_CODES.items()}


@dataclass
class FeaturePairSet:
    """Paired visual/text feature rows; row i of each modality matches."""

    visual: np.ndarray
    text: np.ndarray
    splits: np.ndarray
    class_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        self.visual = as_float_matrix(self.visual, "visual features")
        self.text = as_float_matrix(self.text, "text features")
        if self.visual.shape[0] != self.text.shape[0]:
            raise ValueError(
                f"visual and text row counts differ: {self.visual.shape[0]} vs {self.text.shape[0]}"
            )
        self.splits = np.asarray(self.splits, dtype=np.uint8)
        if self.splits.shape != (self.visual.shape[0],):
            raise ValueError("splits must hold one tag per row")
        if self.splits.size and not np.all(np.isin(self.splits, (0, 1, 2))):
            raise ValueError("split tags must be 0 (train), 1 (val) or 2 (test)")
        if self.class_ids is not None:
            self.class_ids = np.asarray(self.class_ids, dtype=np.int64)
            if self.class_ids.shape != (self.visual.shape[0],):
                raise ValueError("class_ids must hold one id per row")

    @property
    def n(self) -> int:
        return self.visual.shape[0]

    @property
    def d1(self) -> int:
        return self.visual.shape[1]

    @property
    def d2(self) -> int:
        return self.text.shape[1]

    def indices(self, split: str) -> np.ndarray:
        return np.where(self.splits == SPLIT_CODES[split])[0]

    def split_counts(self) -> dict:
        return {name: int((self.splits == code).sum()) for name, code in SPLIT_CODES.items()}


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic cross-modal corpus."""

    num_classes: int = 32
    pairs_per_class: int = 64
    latent_dim: int = 16
    d1: int = 64
    d2: int = 48
    noise_sigma: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.pairs_per_class < 1:
            raise ValueError(f"pairs_per_class must be >= 1, got {self.pairs_per_class}")
        if min(self.latent_dim, self.d1, self.d2) < 1:
            raise ValueError("latent_dim, d1 and d2 must be positive")
        if not np.isfinite(self.noise_sigma) or self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


def split_sizes(n: int) -> tuple:
    """80/10/10 row counts; remainder rows go to train first, then val."""
    n_train, n_val, n_test = int(0.8 * n), int(0.1 * n), int(0.1 * n)
    rem = n - n_train - n_val - n_test
    if rem >= 1:
        n_train += 1
    if rem >= 2:
        n_val += 1
    return n_train, n_val, n_test


def generate_synthetic(spec: SyntheticSpec) -> FeaturePairSet:
    """Draw a deterministic paired corpus from class prototypes.

    Each class has a unit-norm latent prototype; each pair draws one
    shared latent z ~ N(prototype, noise_sigma * I) (noise_sigma is the
    per-dimension variance). The visual view is a fixed random linear map
    of z; the text view is a second map of the same z plus per-dimension
    observation noise with standard deviation noise_sigma / 2, which
    keeps the text view informative while the two modalities stay
    distinct. Rows are shuffled before the 80/10/10 split so splits are
    class-balanced in expectation. The draw order below is part of the
    determinism contract.
    """
    spec.validate()
    rng = make_rng(spec.seed)
    n = spec.num_classes * spec.pairs_per_class

    prototypes = rng.standard_normal((spec.num_classes, spec.latent_dim))
    prototypes /= np.linalg.norm(prototypes, axis=1, keepdims=True)
    map_visual = rng.standard_normal((spec.d1, spec.latent_dim)) / np.sqrt(spec.latent_dim)
    map_text = rng.standard_normal((spec.d2, spec.latent_dim)) / np.sqrt(spec.latent_dim)

    latent = np.repeat(prototypes, spec.pairs_per_class, axis=0)
    latent = latent + np.sqrt(spec.noise_sigma) * rng.standard_normal((n, spec.latent_dim))
    visual = latent @ map_visual.T
    text = latent @ map_text.T + (spec.noise_sigma / 2.0) * rng.standard_normal((n, spec.d2))
    class_ids = np.repeat(np.arange(spec.num_classes, dtype=np.int64), spec.pairs_per_class)

    perm = rng.permutation(n)
    visual, text, class_ids = visual[perm], text[perm], class_ids[perm]

    n_train, n_val, _ = split_sizes(n)
    splits = np.zeros(n, dtype=np.uint8)
    splits[n_train : n_train + n_val] = SPLIT_CODES["val"]
    splits[n_train + n_val :] = SPLIT_CODES["test"]
    return FeaturePairSet(visual=visual, text=text, splits=splits, class_ids=class_ids)


def save_features(pairs: FeaturePairSet, path) -> None:
    """Write the XMF1 binary layout; byte output is deterministic."""
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<III", pairs.n, pairs.d1, pairs.d2))
        fh.write(pairs.visual.astype("<f4").tobytes(order="C"))
        fh.write(pairs.text.astype("<f4").tobytes(order="C"))
        fh.write(pairs.splits.astype(np.uint8).tobytes())
        if pairs.class_ids is None:
            ids = np.full(pairs.n, NO_CLASS, dtype="<u4")
        else:
            ids = pairs.class_ids.astype("<u4")
        fh.write(ids.tobytes())


def _load_binary(path) -> FeaturePairSet:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != FEATURE_MAGIC:
        raise ValueError(f"{path}: bad magic, not an XMF1 feature file")
    if len(blob) < 16:
        raise ValueError(f"{path}: truncated header")
    n, d1, d2 = struct.unpack("<III", blob[4:16])
    expected = 16 + 4 * n * (d1 + d2) + n + 4 * n
    if len(blob) != expected:
        raise ValueError(
            f"{path}: inconsistent size, expected {expected} bytes for "
            f"(N={n}, d1={d1}, d2={d2}) but file has {len(blob)}"
        )
    offset = 16
    visual = np.frombuffer(blob, dtype="<f4", count=n * d1, offset=offset).reshape(n, d1)
    offset += 4 * n * d1
    text = np.frombuffer(blob, dtype="<f4", count=n * d2, offset=offset).reshape(n, d2)
    offset += 4 * n * d2
    splits = np.frombuffer(blob, dtype=np.uint8, count=n, offset=offset)
    offset += n
    ids = np.frombuffer(blob, dtype="<u4", count=n, offset=offset)
    if not (np.all(np.isfinite(visual)) and np.all(np.isfinite(text))):
        raise ValueError(f"{path}: feature values contain non-finite entries")
    absent = ids == NO_CLASS
    if absent.all() or n == 0:
        class_ids = None
    elif absent.any():
        raise ValueError(f"{path}: class ids are only partially present")
    else:
        class_ids = ids.astype(np.int64)
    return FeaturePairSet(
        visual=visual.astype(np.float64),
        text=text.astype(np.float64),
        splits=splits.copy(),
        class_ids=class_ids,
    )


def _load_csv(path) -> FeaturePairSet:
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV file") from None
        d1 = sum(1 for name in header if name.startswith("v_"))
        d2 = sum(1 for name in header if name.startswith("t_"))
        expected = [f"v_{i}" for i in range(d1)] + [f"t_{i}" for i in range(d2)]
        if d1 == 0 or d2 == 0 or header != expected:
            raise ValueError(
                f"{path}: CSV header must be v_0..v_{{d1-1}},t_0..t_{{d2-1}}"
            )
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != d1 + d2:
                raise ValueError(f"{path}: line {line_no} has {len(row)} fields, expected {d1 + d2}")
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                raise ValueError(f"{path}: line {line_no} contains a non-numeric field") from None
    if not rows:
        raise ValueError(f"{path}: CSV contains no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    return FeaturePairSet(
        visual=arr[:, :d1],
        text=arr[:, d1:],
        splits=np.zeros(len(rows), dtype=np.uint8),
        class_ids=None,
    )


def load_features(path) -> FeaturePairSet:
    """Load a feature file; ``.csv`` goes through the CSV importer."""
    if str(path).lower().endswith(".csv"):
        return _load_csv(path)
    return _load_binary(path)
