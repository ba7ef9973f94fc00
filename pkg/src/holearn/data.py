"""Datasets with interval-valued ordinal labels.

The central objects are :class:`LabelInterval` (a closed range of ordinal
classes; a precise label is the degenerate range ``lo == hi``) and
:class:`OrdinalDataset` (a feature matrix plus one interval per row).
The module also covers the surrounding plumbing: CSV ingestion, binning a
numeric target into ordinal classes, redundancy-based feature screening,
standardization, and group-aware fold splitting.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import substream


class DatasetError(ValueError):
    """Raised for malformed input data or invalid dataset operations."""


@dataclass(frozen=True, order=True)
class LabelInterval:
    """Closed integer interval ``[lo, hi]`` of 1-based ordinal classes.

    ``lo == hi`` encodes a precise label; ``lo < hi`` means the true class
    is known only to lie somewhere inside the interval.
    """

    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo < 1:
            raise DatasetError(f"interval lower bound must be >= 1, got {self.lo}")
        if self.lo > self.hi:
            raise DatasetError(f"interval has lo > hi: [{self.lo}, {self.hi}]")

    def is_precise(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, label: int) -> bool:
        return self.lo <= label <= self.hi

    @property
    def width(self) -> int:
        """Number of classes the interval covers."""
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class OrdinalDataset:
    """Feature matrix plus one :class:`LabelInterval` per row.

    ``group_ids`` (optional) mark rows that must never be separated across
    train/validation folds, e.g. repeated measurements of one subject.
    Instances are immutable; the feature array is made read-only.
    """

    features: np.ndarray
    labels: tuple[LabelInterval, ...]
    k_classes: int
    group_ids: np.ndarray | None = None
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        feats = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        if feats.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise DatasetError("features contain NaN or Inf")
        if self.k_classes < 2:
            raise DatasetError(f"need at least 2 classes, got {self.k_classes}")
        labels = tuple(self.labels)
        if len(labels) != feats.shape[0]:
            raise DatasetError(
                f"{feats.shape[0]} feature rows but {len(labels)} labels"
            )
        for row, lab in enumerate(labels):
            if lab.hi > self.k_classes:
                raise DatasetError(
                    f"label [{lab.lo}, {lab.hi}] outside [1, {self.k_classes}] at row {row + 1}"
                )
        feats.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        if self.group_ids is not None:
            gids = np.asarray(self.group_ids, dtype=np.int64)
            if gids.shape != (feats.shape[0],):
                raise DatasetError("group_ids length does not match feature rows")
            gids.flags.writeable = False
            object.__setattr__(self, "group_ids", gids)
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != feats.shape[1]:
                raise DatasetError("feature_names length does not match columns")
            object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def lower_bounds(self) -> np.ndarray:
        return np.array([lab.lo for lab in self.labels], dtype=np.int64)

    def upper_bounds(self) -> np.ndarray:
        return np.array([lab.hi for lab in self.labels], dtype=np.int64)

    def precise_mask(self) -> np.ndarray:
        return np.array([lab.is_precise() for lab in self.labels], dtype=bool)

    def subset(self, indices) -> "OrdinalDataset":
        """Dataset restricted to ``indices`` (kept in the given order)."""
        idx = np.asarray(indices, dtype=np.int64)
        return OrdinalDataset(
            features=self.features[idx],
            labels=tuple(self.labels[i] for i in idx),
            k_classes=self.k_classes,
            group_ids=None if self.group_ids is None else self.group_ids[idx],
            feature_names=self.feature_names,
        )

    def with_labels(self, labels) -> "OrdinalDataset":
        return replace(self, labels=tuple(labels))

    def with_features(self, features, feature_names=None) -> "OrdinalDataset":
        return replace(self, features=features, feature_names=feature_names)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

MISSING_TOKENS = {"", "?", "na", "n/a", "nan", "null"}


@dataclass(frozen=True)
class ColumnSchema:
    """Column roles for :func:`load_csv`.

    Either ``label`` (a single precise-label column) or both ``lo`` and
    ``hi`` (interval bound columns) must be given. ``features=None`` takes
    every remaining column. Columns named in ``categorical`` are one-hot
    encoded with levels sorted alphabetically.
    """

    label: str | None = None
    lo: str | None = None
    hi: str | None = None
    features: tuple[str, ...] | None = None
    group: str | None = None
    categorical: tuple[str, ...] = ()
    k_classes: int | None = None
    drop_missing: bool = False

    def __post_init__(self) -> None:
        single = self.label is not None
        paired = self.lo is not None and self.hi is not None
        if single == paired:
            raise DatasetError(
                "schema needs either a single label column or a lo/hi pair"
            )


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        header = [name.strip() for name in header]
        rows = [row for row in reader if row]
    if len(set(header)) != len(header):
        raise DatasetError(f"{path}: duplicate column names in header")
    return header, rows


def _parse_int(text: str, what: str, row: int) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise DatasetError(f"{what} {text!r} is not an integer at row {row}") from None


def load_csv(path, schema: ColumnSchema) -> OrdinalDataset:
    """Load a header-first CSV file into an :class:`OrdinalDataset`.

    Row numbers in error messages are 1-based over data rows (the header
    is row 0). With a single-label schema every returned interval is
    precise. ``k_classes`` defaults to the largest upper bound seen.
    """
    header, rows = _read_rows(path)
    col = {name: j for j, name in enumerate(header)}

    def require(name: str) -> int:
        if name not in col:
            raise DatasetError(f"{path}: no column named {name!r}")
        return col[name]

    if schema.label is not None:
        lo_j = hi_j = require(schema.label)
    else:
        lo_j = require(schema.lo)
        hi_j = require(schema.hi)
    group_j = require(schema.group) if schema.group is not None else None

    reserved = {header[lo_j], header[hi_j]}
    if group_j is not None:
        reserved.add(header[group_j])
    if schema.features is None:
        feat_names = [name for name in header if name not in reserved]
    else:
        feat_names = list(schema.features)
    feat_js = [require(name) for name in feat_names]
    categorical = set(schema.categorical)
    for name in categorical:
        if name not in feat_names:
            raise DatasetError(f"categorical column {name!r} is not a feature")

    width = len(header)
    kept_rows: list[list[str]] = []
    labels: list[LabelInterval] = []
    groups: list[str] = []
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise DatasetError(
                f"{path}: expected {width} columns, found {len(row)} at row {r}"
            )
        cells = [c.strip() for c in row]
        if schema.drop_missing and any(
            cells[j].lower() in MISSING_TOKENS for j in feat_js
        ):
            continue
        lo = _parse_int(cells[lo_j], "label", r)
        hi = lo if hi_j == lo_j else _parse_int(cells[hi_j], "label", r)
        if lo > hi:
            raise DatasetError(f"{path}: lo > hi at row {r} ([{lo}, {hi}])")
        if lo < 1:
            raise DatasetError(f"{path}: label below 1 at row {r}")
        labels.append(LabelInterval(lo, hi))
        kept_rows.append(cells)
        if group_j is not None:
            groups.append(cells[group_j])

    if not kept_rows:
        raise DatasetError(f"{path}: no usable rows")

    k_classes = schema.k_classes
    if k_classes is None:
        k_classes = max(lab.hi for lab in labels)
    for r, lab in enumerate(labels, start=1):
        if lab.hi > k_classes:
            raise DatasetError(
                f"{path}: label outside [1, {k_classes}] at row {r}"
            )

    features, out_names = _build_feature_matrix(
        kept_rows, feat_names, feat_js, categorical, str(path)
    )
    group_ids = None
    if group_j is not None:
        levels = {g: i for i, g in enumerate(sorted(set(groups)))}
        group_ids = np.array([levels[g] for g in groups], dtype=np.int64)
    return OrdinalDataset(
        features=features,
        labels=tuple(labels),
        k_classes=k_classes,
        group_ids=group_ids,
        feature_names=tuple(out_names),
    )


def _build_feature_matrix(rows, feat_names, feat_js, categorical, origin):
    """Assemble numeric columns plus one-hot expansions of categoricals."""
    columns: list[np.ndarray] = []
    out_names: list[str] = []
    for name, j in zip(feat_names, feat_js):
        raw = [row[j] for row in rows]
        if name in categorical:
            levels = sorted(set(raw))
            for level in levels:
                columns.append(
                    np.array([1.0 if v == level else 0.0 for v in raw])
                )
                out_names.append(f"{name}={level}")
            continue
        values = np.empty(len(raw))
        for r, text in enumerate(raw, start=1):
            try:
                values[r - 1] = float(text)
            except ValueError:
                raise DatasetError(
                    f"{origin}: non-numeric value {text!r} in feature "
                    f"{name!r} at row {r}"
                ) from None
        columns.append(values)
        out_names.append(name)
    return np.column_stack(columns), out_names


# ---------------------------------------------------------------------------
# Binning a numeric target into ordinal classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BinningSpec:
    """Maps numeric target ranges to precise classes or label intervals.

    ``class_ranges`` holds ``(lower, upper, class_index)`` triples and
    ``ambiguous_ranges`` holds ``(lower, upper, lo, hi)``; with the default
    ``upper_inclusive`` convention a value v falls in a range when
    ``lower < v <= upper``. Values outside every range are excluded.
    """

    class_ranges: tuple[tuple[float, float, int], ...]
    ambiguous_ranges: tuple[tuple[float, float, int, int], ...] = ()
    upper_inclusive: bool = True

    def __post_init__(self) -> None:
        ranges = [(lo, hi) for lo, hi, _ in self.class_ranges]
        ranges += [(lo, hi) for lo, hi, _, _ in self.ambiguous_ranges]
        for lo, hi in ranges:
            if not lo < hi:
                raise DatasetError(f"empty numeric range ({lo}, {hi})")
        for i in range(len(ranges)):
            for j in range(i + 1, len(ranges)):
                a, b = ranges[i], ranges[j]
                if a[0] < b[1] and b[0] < a[1]:
                    raise DatasetError(f"overlapping ranges {a} and {b}")
        classes = [c for _, _, c in self.class_ranges]
        if sorted(classes) != classes or len(set(classes)) != len(classes):
            raise DatasetError("class ranges must be in increasing class order")
        for lo, hi, ilo, ihi in self.ambiguous_ranges:
            if not ilo < ihi:
                raise DatasetError(
                    f"ambiguous range ({lo}, {hi}) must map to a strict interval"
                )

    def _hits(self, value: float, lower: float, upper: float) -> bool:
        if self.upper_inclusive:
            return lower < value <= upper
        return lower <= value < upper


@dataclass(frozen=True)
class BinCounts:
    precise: int
    interval: int
    excluded: int


def bin_numeric_target(values, spec: BinningSpec):
    """Map each numeric value to a label interval or mark it excluded.

    Returns ``(labels, counts)`` where ``labels[i]`` is a
    :class:`LabelInterval` or ``None`` for excluded values.
    """
    labels: list[LabelInterval | None] = []
    n_precise = n_interval = n_excluded = 0
    for value in np.asarray(values, dtype=np.float64):
        hit: LabelInterval | None = None
        for lower, upper, cls in spec.class_ranges:
            if spec._hits(value, lower, upper):
                hit = LabelInterval(cls, cls)
                break
        if hit is None:
            for lower, upper, ilo, ihi in spec.ambiguous_ranges:
                if spec._hits(value, lower, upper):
                    hit = LabelInterval(ilo, ihi)
                    break
        labels.append(hit)
        if hit is None:
            n_excluded += 1
        elif hit.is_precise():
            n_precise += 1
        else:
            n_interval += 1
    return labels, BinCounts(n_precise, n_interval, n_excluded)


# ---------------------------------------------------------------------------
# Feature screening (recursive elimination of redundant columns)
# ---------------------------------------------------------------------------


def _max_abs_partial_correlation(X: np.ndarray) -> np.ndarray:
    """Per-column maximum |partial correlation| with the other columns.

    The precision matrix comes from the covariance with a small ridge on
    its diagonal so exactly collinear columns do not break the inverse.
    """
    cov = np.cov(X, rowvar=False)
    cov = np.atleast_2d(cov)
    cov = cov + 1e-8 * np.eye(cov.shape[0])
    prec = np.linalg.inv(cov)
    denom = np.sqrt(np.outer(np.diag(prec), np.diag(prec)))
    pcorr = -prec / denom
    np.fill_diagonal(pcorr, 0.0)
    return np.max(np.abs(pcorr), axis=1)


def _regression_rae(X: np.ndarray) -> np.ndarray:
    """Relative absolute error of predicting each column from the others.

    The error is relative to the intercept-only predictor: sum |residual|
    over sum |column - mean|. Small values mean the column is nearly a
    linear function of the rest.
    """
    n, m = X.shape
    out = np.empty(m)
    for j in range(m):
        y = X[:, j]
        design = np.column_stack([np.ones(n), np.delete(X, j, axis=1)])
        beta, *_ = np.linalg.lstsq(design, y, rcond=None)
        resid = np.abs(y - design @ beta).sum()
        base = np.abs(y - y.mean()).sum()
        if base == 0.0:
            out[j] = 0.0 if resid < 1e-9 * max(n, 1) else np.inf
        else:
            out[j] = resid / base
    return out


def screen_features(
    features,
    corr_threshold: float = 0.95,
    rae_threshold: float = 0.05,
) -> np.ndarray:
    """Drop redundant columns one at a time; return retained column indices.

    Each pass flags columns whose maximum |partial correlation| with the
    remaining columns exceeds ``corr_threshold`` or whose regression
    relative absolute error falls below ``rae_threshold``, then removes
    the single most redundant flagged column (smallest error, then largest
    partial correlation, then highest column index). Stops at a fixed
    point. The regression criterion needs more rows than columns and is
    otherwise skipped with a warning.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise DatasetError("screen_features expects a 2-D matrix")
    n = X.shape[0]
    retained = list(range(X.shape[1]))
    warned = False
    while len(retained) >= 2:
        sub = X[:, retained]
        m = len(retained)
        pcorr = _max_abs_partial_correlation(sub)
        if n > m:
            rae = _regression_rae(sub)
        else:
            rae = None
            if not warned:
                warnings.warn(
                    "too few rows for the regression criterion; using the "
                    "partial-correlation criterion only",
                    stacklevel=2,
                )
                warned = True
        flagged = [
            j
            for j in range(m)
            if pcorr[j] > corr_threshold
            or (rae is not None and rae[j] < rae_threshold)
        ]
        if not flagged:
            break
        victim = min(
            flagged,
            key=lambda j: (rae[j] if rae is not None else np.inf, -pcorr[j], -j),
        )
        del retained[victim]
    return np.array(retained, dtype=np.int64)


# ---------------------------------------------------------------------------
# Standardization and fold splitting
# ---------------------------------------------------------------------------


def standardize(train: OrdinalDataset, others=()):
    """Center/scale using training statistics only (population std).

    Constant columns map to zero. Returns the transformed training set,
    the transformed ``others``, and the ``(mean, std)`` pair.
    """
    if train.n_samples == 0:
        raise DatasetError("cannot standardize an empty training set")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    scale = np.where(std > 0.0, std, 1.0)

    def transform(ds: OrdinalDataset) -> OrdinalDataset:
        feats = (ds.features - mean) / scale
        return ds.with_features(feats, feature_names=ds.feature_names)

    return transform(train), [transform(ds) for ds in others], (mean, std)


def group_kfold(dataset: OrdinalDataset, folds: int, seed: int):
    """Split into ``folds`` group-disjoint (train, validation) index pairs.

    Rows without group ids count as singleton groups. Groups are shuffled
    with the fold substream of ``seed`` and dealt round-robin, so fold
    group-counts differ by at most one and the partition is deterministic.
    """
    if folds < 2:
        raise DatasetError("need at least 2 folds")
    if dataset.group_ids is None:
        groups = np.arange(dataset.n_samples, dtype=np.int64)
    else:
        groups = dataset.group_ids
    distinct = np.unique(groups)
    if distinct.size < folds:
        raise DatasetError(
            f"{distinct.size} groups cannot fill {folds} folds"
        )
    order = substream(seed, "folds").permutation(distinct.size)
    fold_of_group = {int(distinct[g]): pos % folds for pos, g in enumerate(order)}
    assignment = np.array([fold_of_group[int(g)] for g in groups], dtype=np.int64)
    splits = []
    for f in range(folds):
        val = np.flatnonzero(assignment == f)
        train_idx = np.flatnonzero(assignment != f)
        splits.append((train_idx, val))
    return splits
