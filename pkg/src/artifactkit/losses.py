"""Reference loss functions for validating training code against exact values.

The training objective is a weighted sum, per sample, of a supervised
contrastive term over sequence representations (positives = samples whose
full ten-bit label vectors match exactly) and a mean binary cross-entropy
over the ten per-artifact probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import fsum, log

import numpy as np

from .errors import ToolkitError, UndefinedMetricError
from .labels import LabelVector


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 0.5
    beta: float = 0.5
    temperature: float = 0.1
    eps: float = 1e-7

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ToolkitError("loss weights must be nonnegative")
        if self.temperature <= 0:
            raise ToolkitError("temperature must be positive")
        if not 0 < self.eps < 0.5:
            raise ToolkitError("probability clamp must lie in (0, 0.5)")


@dataclass(frozen=True)
class Batch:
    """B representations with their label vectors and predicted probabilities."""

    reps: np.ndarray
    labels: tuple[LabelVector, ...]
    probs: np.ndarray

    def __post_init__(self):
        reps = np.asarray(self.reps, dtype=np.float64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if reps.ndim != 2 or reps.shape[0] < 2:
            raise ToolkitError("batch needs a (B, dim) representation array with B >= 2")
        b = reps.shape[0]
        if len(self.labels) != b or probs.shape != (b, len(LabelVector.zeros().bits)):
            raise ToolkitError("labels and probs must match the batch size (and 10 artifact slots)")
        if not (np.isfinite(probs).all() and (probs >= 0).all() and (probs <= 1).all()):
            raise ToolkitError("probabilities must be finite and within [0, 1]")
        object.__setattr__(self, "reps", reps)
        object.__setattr__(self, "probs", probs)

    @property
    def size(self) -> int:
        return self.reps.shape[0]


def cosine_sim(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ToolkitError(f"similarity needs equal shapes, got {a.shape} and {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise UndefinedMetricError("cosine similarity undefined for a zero vector")
    return float(a @ b / (na * nb))


def contrastive_loss(batch: Batch, cfg: LossConfig = LossConfig()) -> np.ndarray:
    """Per-sample contrastive terms; samples without positives contribute 0."""
    b = batch.size
    sim = np.empty((b, b))
    for i in range(b):
        for j in range(i, b):
            sim[i, j] = sim[j, i] = 1.0 if i == j else cosine_sim(batch.reps[i], batch.reps[j])
    scaled = sim / cfg.temperature

    losses = np.zeros(b)
    for i in range(b):
        positives = [j for j in range(b) if j != i and batch.labels[j] == batch.labels[i]]
        if not positives:
            continue
        others = [k for k in range(b) if k != i]
        # log-sum-exp over the denominator keeps exp(sim/tau) finite
        peak = scaled[i, others].max()
        log_denom = peak + log(fsum(np.exp(scaled[i, others] - peak)))
        terms = [scaled[i, j] - log_denom for j in positives]
        losses[i] = -fsum(terms) / len(positives) + 0.0  # avoid printing -0.0
    return losses


def bce_loss(labels: LabelVector, probs, eps: float = 1e-7) -> float:
    """Mean binary cross-entropy over the ten artifact slots."""
    probs = np.clip(np.asarray(probs, dtype=np.float64), eps, 1.0 - eps)
    if probs.shape != (len(labels.bits),):
        raise ToolkitError(f"need {len(labels.bits)} probabilities, got shape {probs.shape}")
    y = np.array(labels.bits, dtype=np.float64)
    terms = y * np.log(probs) + (1.0 - y) * np.log(1.0 - probs)
    return -fsum(terms) / len(y)


def total_loss(batch: Batch, cfg: LossConfig = LossConfig()) -> float:
    """Weighted sum over the batch of contrastive and cross-entropy terms."""
    contrastive = contrastive_loss(batch, cfg)
    bce = [bce_loss(batch.labels[i], batch.probs[i], cfg.eps) for i in range(batch.size)]
    return fsum(cfg.alpha * c + cfg.beta * e for c, e in zip(contrastive, bce))


# ---------------------------------------------------------------------------
# plain-text batch files for cross-language validation

def read_batch_file(path) -> Batch:
    """Parse the line-oriented batch format.

    Layout: ``B <n>``, ``dim <d>``, then n ``rep`` lines of d reals, n
    ``labels`` lines of ten-bit strings, n ``probs`` lines of ten reals.
    """
    tokens: dict[str, list[list[str]]] = {"rep": [], "labels": [], "probs": []}
    scalars: dict[str, int] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, *rest = line.split()
            if key in ("B", "dim"):
                scalars[key] = int(rest[0])
            elif key in tokens:
                tokens[key].append(rest)
            else:
                raise ToolkitError(f"{path}:{lineno}: unknown line kind {key!r}")
    try:
        b, dim = scalars["B"], scalars["dim"]
        reps = np.array([[float(v) for v in row] for row in tokens["rep"]])
        labels = tuple(LabelVector.from_bitstring(row[0]) for row in tokens["labels"])
        probs = np.array([[float(v) for v in row] for row in tokens["probs"]])
    except (KeyError, ValueError, IndexError) as exc:
        raise ToolkitError(f"{path}: malformed batch file ({exc})") from exc
    if reps.shape != (b, dim):
        raise ToolkitError(f"{path}: rep block is {reps.shape}, header says ({b}, {dim})")
    return Batch(reps=reps, labels=labels, probs=probs)
