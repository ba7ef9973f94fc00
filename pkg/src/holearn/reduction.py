"""Reduction of interval-labeled ordinal classification to coupled binary tasks.

An ordinal classifier over ``K`` classes is a stack of ``K - 1`` threshold
scores ``f_1 <= ... <= f_{K-1}``; the predicted class is one plus the
number of strictly negative scores. For a label interval ``[lo, hi]`` each
threshold ``k`` gets a sign

    +1  if k >= hi        (the sample lies at or below threshold k)
    -1  if k <  lo        (the sample lies above threshold k)
     0  otherwise         (the interval straddles the threshold)

and a nonnegative weight. The weighted count of sign disagreements across
thresholds (:func:`reduction_loss`) equals the direct interval loss of the
predicted class whenever the scores are non-decreasing, which is what lets
the training problem be solved as coupled binary classifiers. Two weight
schemes are built in: distance-to-interval (``MAE``) and inside/outside
(``ZERO_ONE``).
"""

from __future__ import annotations

from enum import Enum
from typing import NamedTuple

import numpy as np

from .data import LabelInterval


class LossKind(Enum):
    MAE = "mae"
    ZERO_ONE = "zero_one"


def label_from_scores(scores) -> np.ndarray | int:
    """Predicted class = 1 + number of strictly negative scores.

    A score of exactly zero counts as non-negative. Accepts one score row
    or a matrix of rows.
    """
    arr = np.asarray(scores, dtype=np.float64)
    pred = 1 + np.count_nonzero(arr < 0.0, axis=-1)
    if arr.ndim == 1:
        return int(pred)
    return pred.astype(np.int64)


def sign_encoding(label: LabelInterval, k_classes: int) -> np.ndarray:
    """Per-threshold signs in {-1, 0, +1}; see the module docstring."""
    ks = np.arange(1, k_classes)
    return np.where(ks >= label.hi, 1, np.where(ks < label.lo, -1, 0)).astype(np.int8)


def threshold_weights(
    label: LabelInterval, k_classes: int, kind: LossKind
) -> np.ndarray:
    """0/1 weight per threshold.

    ``MAE`` weights every threshold outside the interval; ``ZERO_ONE``
    weights only the two thresholds adjacent to the interval boundaries
    (``k == lo - 1`` and ``k == hi``).
    """
    ks = np.arange(1, k_classes)
    if kind is LossKind.MAE:
        mask = (ks <= label.lo - 1) | (ks >= label.hi)
    else:
        mask = (ks == label.lo - 1) | (ks == label.hi)
    return mask.astype(np.float64)


def encode_dataset(labels, k_classes: int, kind: LossKind):
    """Stack sign encodings and weights for a label sequence."""
    signs = np.vstack([sign_encoding(lab, k_classes) for lab in labels])
    weights = np.vstack([threshold_weights(lab, k_classes, kind) for lab in labels])
    return signs, weights


def interval_loss(predicted: int, label: LabelInterval, kind: LossKind) -> float:
    """Loss of predicting class ``predicted`` against an interval label.

    ``MAE``: distance to the nearest class inside the interval.
    ``ZERO_ONE``: one if the prediction falls outside, else zero.
    """
    if predicted in label:
        return 0.0
    if kind is LossKind.MAE:
        return float(max(label.lo - predicted, predicted - label.hi))
    return 1.0


def weighted_interval_loss(
    predicted: int, label: LabelInterval, weights
) -> float:
    """General-form loss: a sum of per-threshold weights outside the interval.

    Zero inside ``[lo, hi]``; below the interval it accumulates the weights
    of thresholds ``predicted .. lo-1``; above, thresholds ``hi .. predicted-1``.
    Any nonnegative weight vector yields a loss that is zero on the interval
    and non-increasing toward it.
    """
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0.0):
        raise ValueError("weights must be nonnegative")
    if predicted in label:
        return 0.0
    if predicted < label.lo:
        return float(w[predicted - 1 : label.lo - 1].sum())
    return float(w[label.hi - 1 : predicted - 1].sum())


def reduction_loss(scores, signs, weights) -> float:
    """Weighted sign-disagreement count over all (sample, threshold) pairs.

    Thresholds with sign zero never contribute; a score of exactly zero
    agrees with a +1 sign (the disagreement test is strict).
    """
    f = np.asarray(scores, dtype=np.float64)
    z = np.asarray(signs)
    w = np.asarray(weights, dtype=np.float64)
    if not f.shape == z.shape == w.shape:
        raise ValueError("scores, signs, and weights must share one shape")
    wrong = (z != 0) & (z * f < 0.0)
    return float(w[wrong].sum())


class EquivalenceResult(NamedTuple):
    equal: bool
    direct: float
    reduced: float


def check_loss_equivalence(scores, labels, kind: LossKind) -> EquivalenceResult:
    """Compare the direct interval loss against the binary-reduction loss.

    Requires every score row to be non-decreasing (the threshold ordering
    the equivalence relies on); a violating row raises ``ValueError``.
    Both totals are integer-valued for the built-in weight schemes, so the
    comparison is exact.
    """
    f = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    labels = list(labels)
    if f.shape[0] != len(labels):
        raise ValueError("one score row per label required")
    bad = np.flatnonzero(np.any(np.diff(f, axis=1) < 0.0, axis=1))
    if bad.size:
        raise ValueError(
            f"score row {int(bad[0])} is not non-decreasing across thresholds"
        )
    k_classes = f.shape[1] + 1
    direct = 0.0
    for row, lab in zip(f, labels):
        direct += interval_loss(label_from_scores(row), lab, kind)
    signs, weights = encode_dataset(labels, k_classes, kind)
    reduced = reduction_loss(f, signs, weights)
    return EquivalenceResult(direct == reduced, direct, reduced)
