"""Turn precisely-labeled data into hybrid precise/interval training data.

For a sample with true class ``y`` out of ``K``, the interval upper bound
is drawn from a discretized normal centered at ``y`` and truncated to
``[y, K]``: the mass at bound ``r`` is proportional to
``Phi((r - y + 1.5) / sigma) - Phi((r - y + 0.5) / sigma)``, renormalized
over the support. The lower bound mirrors this on ``[1, y]`` with mass at
``l`` proportional to ``Phi((l - y - 0.5) / sigma) - Phi((l - y - 1.5) / sigma)``.
Both bounds decay away from the true class; drawing them independently can
reproduce the precise label (``lo == hi == y``) or any interval containing
``y``, never one that excludes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import substream
from .data import LabelInterval, OrdinalDataset


@dataclass(frozen=True)
class SimulationParams:
    """Spread ``sigma`` of the discretized normal and the RNG seed."""

    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def _normal_cdf(x: float, sigma: float) -> float:
    return 0.5 * (1.0 + math.erf(x / (sigma * math.sqrt(2.0))))


def bound_support(y: int, k_classes: int, side: str) -> np.ndarray:
    """Classes the ``side`` bound of a true label ``y`` can take."""
    if side == "upper":
        return np.arange(y, k_classes + 1)
    if side == "lower":
        return np.arange(1, y + 1)
    raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")


def interval_bound_pmf(
    y: int, k_classes: int, side: str, params: SimulationParams
) -> np.ndarray:
    """Probability vector of the interval bound over :func:`bound_support`.

    Entries are nonnegative and normalized to sum to one; the mass is
    largest at the true class and decays monotonically away from it.
    """
    if not 1 <= y <= k_classes:
        raise ValueError(f"true class {y} outside [1, {k_classes}]")
    support = bound_support(y, k_classes, side)
    mass = np.empty(support.size)
    for idx, bound in enumerate(support):
        offset = float(bound - y)
        if side == "upper":
            hi, lo = offset + 1.5, offset + 0.5
        else:
            hi, lo = offset - 0.5, offset - 1.5
        mass[idx] = _normal_cdf(hi, params.sigma) - _normal_cdf(lo, params.sigma)
    total = mass.sum()
    if not total > 0.0:
        raise ValueError("degenerate bound distribution (zero total mass)")
    return mass / total


def simulate_intervals(
    dataset: OrdinalDataset, params: SimulationParams
) -> OrdinalDataset:
    """Replace each precise label ``y`` with a drawn interval containing it.

    Lower and upper bounds are drawn independently per sample from their
    bound distributions, so ``lo <= y <= hi`` always holds and ``lo == hi``
    (a precise label surviving) is possible. Deterministic given
    ``params.seed``.
    """
    if not all(lab.is_precise() for lab in dataset.labels):
        raise ValueError("simulate_intervals needs an all-precise dataset")
    rng = substream(params.seed, "simulate")
    k = dataset.k_classes
    y = dataset.lower_bounds()
    lo = np.empty(dataset.n_samples, dtype=np.int64)
    hi = np.empty(dataset.n_samples, dtype=np.int64)
    for cls in range(1, k + 1):
        rows = np.flatnonzero(y == cls)
        if rows.size == 0:
            continue
        lo_support = bound_support(cls, k, "lower")
        hi_support = bound_support(cls, k, "upper")
        lo_pmf = interval_bound_pmf(cls, k, "lower", params)
        hi_pmf = interval_bound_pmf(cls, k, "upper", params)
        lo[rows] = rng.choice(lo_support, size=rows.size, p=lo_pmf)
        hi[rows] = rng.choice(hi_support, size=rows.size, p=hi_pmf)
    labels = tuple(
        LabelInterval(int(lovalue), int(hivalue)) for lovalue, hivalue in zip(lo, hi)
    )
    return dataset.with_labels(labels)
