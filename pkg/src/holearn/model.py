"""User-facing estimator: fit, predict, grid search, baseline variants."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import substream
from .data import (
    DatasetError,
    LabelInterval,
    OrdinalDataset,
    group_kfold,
    screen_features,
    standardize,
)
from .kernels import KernelSpec
from .reduction import LossKind, label_from_scores
from .solver import (
    DualSolution,
    FittedScorer,
    SolverError,
    build_dual,
    fit_scorer,
    recover_intercepts,
    solve_smo,
)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one fit.

    ``lam`` is the box bound of the dual problem (larger means less
    regularization). ``screen`` turns on redundancy-based feature
    screening before standardization.
    """

    loss: LossKind = LossKind.MAE
    lam: float = 1.0
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec("linear"))
    tol: float = 1e-3
    max_passes: int | None = None
    standardize: bool = True
    screen: bool = False
    corr_threshold: float = 0.95
    rae_threshold: float = 0.05

    def __post_init__(self) -> None:
        if not self.lam > 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")

    def label(self) -> str:
        return f"{self.loss.value},lam={self.lam:g},{self.kernel.label()}"


@dataclass(frozen=True)
class HybridOrdinalModel:
    """Fitted ordinal classifier with its input transforms baked in."""

    scorer: FittedScorer
    config: TrainConfig
    k_classes: int
    n_features_in: int
    retained: np.ndarray | None
    feature_mean: np.ndarray | None
    feature_std: np.ndarray | None
    solver_iterations: int
    solver_converged: bool
    kkt_violation: float

    def _transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features_in:
            raise DatasetError(
                f"model expects {self.n_features_in} features, got {X.shape[1]}"
            )
        if self.retained is not None:
            X = X[:, self.retained]
        if self.feature_mean is not None:
            scale = np.where(self.feature_std > 0.0, self.feature_std, 1.0)
            X = (X - self.feature_mean) / scale
        return X

    def decision_values(self, X) -> np.ndarray:
        """(m, K-1) threshold scores; columns are non-decreasing."""
        return self.scorer.decision_values(self._transform(X))

    def predict(self, X) -> np.ndarray:
        """Predicted classes in [1, K]."""
        return np.asarray(label_from_scores(self.decision_values(X)))


def fit(dataset: OrdinalDataset, config: TrainConfig) -> HybridOrdinalModel:
    """Standardize, assemble the dual, solve, and recover intercepts."""
    features = dataset.features
    retained = None
    if config.screen:
        retained = screen_features(
            features, config.corr_threshold, config.rae_threshold
        )
        dataset = dataset.with_features(features[:, retained])
    mean = std = None
    work = dataset
    if config.standardize:
        work, _, (mean, std) = standardize(dataset)
    problem = build_dual(work, config.kernel, config.lam, config.loss)
    solution = solve_smo(problem, tol=config.tol, max_passes=config.max_passes)
    intercepts = recover_intercepts(problem, solution)
    scorer = fit_scorer(
        problem, solution, work.features, config.kernel, intercepts, work.k_classes
    )
    return HybridOrdinalModel(
        scorer=scorer,
        config=config,
        k_classes=dataset.k_classes,
        n_features_in=features.shape[1],
        retained=retained,
        feature_mean=mean,
        feature_std=std,
        solver_iterations=solution.iterations,
        solver_converged=solution.converged,
        kkt_violation=solution.kkt_violation,
    )


# ---------------------------------------------------------------------------
# Baseline label handling
# ---------------------------------------------------------------------------


def to_no_interval(dataset: OrdinalDataset) -> OrdinalDataset:
    """Keep only precisely-labeled samples."""
    idx = np.flatnonzero(dataset.precise_mask())
    if idx.size == 0:
        raise DatasetError("dataset has no precisely-labeled samples")
    return dataset.subset(idx)


def to_mid_interval(dataset: OrdinalDataset, seed: int = 0) -> OrdinalDataset:
    """Collapse each interval to its middle class.

    Intervals covering an even number of classes have two middle classes;
    one is chosen uniformly per sample from the tie-break substream of
    ``seed``. Precise labels pass through unchanged.
    """
    rng = substream(seed, "tiebreak")
    labels = []
    for lab in dataset.labels:
        if lab.is_precise():
            labels.append(lab)
            continue
        if lab.width % 2 == 1:
            mid = (lab.lo + lab.hi) // 2
        else:
            mid = (lab.lo + lab.hi - 1) // 2 + int(rng.integers(0, 2))
        labels.append(LabelInterval(mid, mid))
    return dataset.with_labels(labels)


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------


def default_grid(n_features: int) -> list[TrainConfig]:
    """Default tuning grid over loss kind, kernel, and box bound."""
    gammas = [0.5 / n_features, 1.0 / n_features, 2.0 / n_features]
    kernels = [KernelSpec("linear")] + [KernelSpec("rbf", gamma=g) for g in gammas]
    lams = [0.01, 0.1, 1.0, 10.0, 100.0]
    return [
        TrainConfig(loss=loss, lam=lam, kernel=kern)
        for loss in (LossKind.MAE, LossKind.ZERO_ONE)
        for kern in kernels
        for lam in lams
    ]


@dataclass(frozen=True)
class GridCell:
    config: TrainConfig
    mean_error: float
    fold_errors: tuple[float, ...]


@dataclass(frozen=True)
class GridSearchResult:
    best: TrainConfig
    table: tuple[GridCell, ...]


def _validation_error(model: HybridOrdinalModel, val: OrdinalDataset) -> float:
    """Fraction of validation samples predicted outside their interval."""
    pred = model.predict(val.features)
    hits = [int(p) in lab for p, lab in zip(pred, val.labels)]
    return 1.0 - float(np.mean(hits))


def grid_search_cv(
    dataset: OrdinalDataset,
    grid,
    folds: int = 10,
    seed: int = 0,
) -> GridSearchResult:
    """Pick the grid config with the lowest mean CV classification error.

    A validation prediction counts as correct when it falls inside the
    sample's label interval. Ties break toward smaller ``lam``, then the
    simpler kernel, then grid order. A fold whose fit fails contributes
    an error of 1.0 (with a warning) rather than aborting the search.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("grid must not be empty")
    splits = group_kfold(dataset, folds, seed)
    cells = []
    for config in grid:
        errors = []
        for train_idx, val_idx in splits:
            try:
                model = fit(dataset.subset(train_idx), config)
            except SolverError as exc:
                warnings.warn(
                    f"fold fit failed for {config.label()}: {exc}", stacklevel=2
                )
                errors.append(1.0)
                continue
            errors.append(_validation_error(model, dataset.subset(val_idx)))
        cells.append(
            GridCell(
                config=config,
                mean_error=float(np.mean(errors)),
                fold_errors=tuple(errors),
            )
        )
    best_idx = min(
        range(len(cells)),
        key=lambda i: (
            cells[i].mean_error,
            cells[i].config.lam,
            cells[i].config.kernel.complexity_rank,
            i,
        ),
    )
    return GridSearchResult(best=cells[best_idx].config, table=tuple(cells))
