"""Closed-form loss values, invariances, and the batch file format."""

from math import log

import numpy as np
import pytest

from artifactkit.errors import ToolkitError, UndefinedMetricError
from artifactkit.labels import LabelVector
from artifactkit.losses import (
    Batch,
    LossConfig,
    bce_loss,
    contrastive_loss,
    cosine_sim,
    read_batch_file,
    total_loss,
)

ZEROS = LabelVector.zeros()
ONES = LabelVector.from_bitstring("1" * 10)


def make_batch(reps, labels, probs=None):
    reps = np.asarray(reps, dtype=np.float64)
    if probs is None:
        probs = np.full((reps.shape[0], 10), 0.5)
    return Batch(reps=reps, labels=tuple(labels), probs=np.asarray(probs, dtype=np.float64))


# ---------------------------------------------------------------------------
# cosine similarity

def test_cosine_known_values():
    assert cosine_sim([1.0, 0.0], [2.0, 0.0]) == 1.0
    assert cosine_sim([1.0, 0.0], [0.0, 3.0]) == 0.0
    assert abs(cosine_sim([1.0, 2.0], [2.0, 1.0]) - 0.8) < 1e-15


def test_cosine_zero_vector_undefined():
    with pytest.raises(UndefinedMetricError):
        cosine_sim([0.0, 0.0], [1.0, 1.0])


# ---------------------------------------------------------------------------
# contrastive term

def test_contrastive_two_identical_positives_zero():
    batch = make_batch([[1.0, 0.0], [1.0, 0.0]], [ZEROS, ZEROS])
    losses = contrastive_loss(batch)
    assert np.array_equal(losses, [0.0, 0.0])
    assert str(losses[0]) == "0.0"  # not -0.0


def test_contrastive_three_identical_log2():
    # A, A, B with identical representations: the denominator holds two
    # equal terms and one of them is the positive, so each A-term is log 2
    batch = make_batch([[0.5, 0.5]] * 3, [ZEROS, ZEROS, ONES])
    losses = contrastive_loss(batch)
    assert abs(losses[0] - log(2.0)) <= 1e-12
    assert abs(losses[1] - log(2.0)) <= 1e-12
    assert losses[2] == 0.0  # no positive partner


def test_contrastive_rescale_invariance():
    rng = np.random.default_rng(0)
    reps = rng.normal(size=(6, 8))
    labels = [ZEROS, ZEROS, ONES, ONES, ZEROS, ONES]
    a = contrastive_loss(make_batch(reps, labels))
    b = contrastive_loss(make_batch(reps * 37.0, labels))
    assert np.max(np.abs(a - b)) <= 1e-9


def test_contrastive_permutation_invariance():
    rng = np.random.default_rng(1)
    reps = rng.normal(size=(5, 4))
    labels = [ZEROS, ONES, ZEROS, ONES, ZEROS]
    base = contrastive_loss(make_batch(reps, labels))
    perm = rng.permutation(5)
    shuffled = contrastive_loss(make_batch(reps[perm], [labels[i] for i in perm]))
    assert np.max(np.abs(base[perm] - shuffled)) <= 1e-12


def test_contrastive_temperature_default():
    assert LossConfig().temperature == 0.1
    with pytest.raises(ToolkitError):
        LossConfig(temperature=0.0)


# ---------------------------------------------------------------------------
# cross-entropy term

def test_bce_half_everywhere_ln2():
    assert abs(bce_loss(ZEROS, np.full(10, 0.5)) - log(2.0)) <= 1e-12


def test_bce_single_error_slot():
    labels = LabelVector.from_bitstring("1000000000")
    probs = np.array([0.9] + [0.1] * 9)
    # every slot contributes -ln 0.9, so the mean is -ln 0.9
    assert abs(bce_loss(labels, probs) - (-log(0.9))) <= 1e-12


def test_bce_perfect_prediction_near_zero():
    probs = np.array([1.0] * 3 + [0.0] * 7)
    labels = LabelVector.from_bitstring("1110000000")
    assert bce_loss(labels, probs) < 2e-7  # clamped at eps


def test_bce_shape_check():
    with pytest.raises(ToolkitError):
        bce_loss(ZEROS, np.full(9, 0.5))


# ---------------------------------------------------------------------------
# total

def test_total_weighted_sum():
    rng = np.random.default_rng(2)
    reps = rng.normal(size=(4, 6))
    labels = [ZEROS, ZEROS, ONES, ONES]
    probs = rng.uniform(0.05, 0.95, size=(4, 10))
    batch = make_batch(reps, labels, probs)

    cfg = LossConfig(alpha=0.5, beta=0.5)
    contrastive = contrastive_loss(batch, cfg)
    bce = [bce_loss(labels[i], probs[i]) for i in range(4)]
    want = 0.5 * float(np.sum(contrastive)) + 0.5 * float(np.sum(bce))
    assert abs(total_loss(batch, cfg) - want) <= 1e-12

    only_bce = total_loss(batch, LossConfig(alpha=0.0, beta=1.0))
    assert abs(only_bce - float(np.sum(bce))) <= 1e-12


def test_total_smooth_in_representations():
    # central differences of a smooth function shrink ~h^2
    rng = np.random.default_rng(3)
    reps = rng.normal(size=(3, 4))
    labels = [ZEROS, ZEROS, ONES]

    def f(h):
        bumped = reps.copy()
        bumped[0, 0] += h
        return total_loss(make_batch(bumped, labels))

    d1 = abs(f(1e-3) + f(-1e-3) - 2 * f(0.0))
    d2 = abs(f(1e-4) + f(-1e-4) - 2 * f(0.0))
    assert d2 < d1


# ---------------------------------------------------------------------------
# batch files

BATCH_TEXT = """\
# two-sample batch
B 2
dim 3
rep 1.0 0.0 0.0
rep 0.0 1.0 0.0
labels 0000000000
labels 0000000000
probs 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5
probs 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5
"""


def test_batch_file_roundtrip(tmp_path):
    path = tmp_path / "batch.txt"
    path.write_text(BATCH_TEXT)
    batch = read_batch_file(path)
    assert batch.size == 2
    assert np.array_equal(batch.reps, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert batch.labels == (ZEROS, ZEROS)
    # the sole denominator term is the positive itself, so the loss vanishes
    # even though the representations are orthogonal
    assert np.array_equal(contrastive_loss(batch), [0.0, 0.0])


def test_batch_file_malformed(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("B 2\ndim 3\nrep 1.0 0.0\n")
    with pytest.raises(ToolkitError):
        read_batch_file(bad)
    unknown = tmp_path / "unknown.txt"
    unknown.write_text("B 1\nweights 1 2 3\n")
    with pytest.raises(ToolkitError):
        read_batch_file(unknown)


def test_batch_validation():
    with pytest.raises(ToolkitError):
        make_batch([[1.0, 0.0]], [ZEROS])  # B < 2
    with pytest.raises(ToolkitError):
        Batch(reps=np.eye(2), labels=(ZEROS, ZEROS), probs=np.full((2, 10), 1.5))
