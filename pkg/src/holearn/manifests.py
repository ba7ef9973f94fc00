"""Dataset manifests: declarative recipes for benchmark data preparation.

A manifest names the source (a user-supplied CSV or a built-in synthetic
generator), the column roles, how a numeric target maps onto ordinal
classes, how train/test are split, whether interval labels are simulated
on the training side, and the tuning grid. The shipped manifests encode
the four public benchmark datasets plus two synthetic fixtures.

Raw data files are never downloaded; they are resolved inside a user
-provided data directory.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from ._rng import substream
from .data import (
    BinningSpec,
    DatasetError,
    LabelInterval,
    OrdinalDataset,
    _build_feature_matrix,
    _read_rows,
    bin_numeric_target,
)
from .kernels import KernelSpec
from .model import TrainConfig, default_grid
from .reduction import LossKind
from .simulate import SimulationParams, simulate_intervals


class ManifestError(ValueError):
    """Raised for unknown manifests or malformed manifest documents."""


class DataFilesMissing(FileNotFoundError):
    """Raised when a manifest's raw data file is absent."""


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    k_classes: int
    spec: dict

    @property
    def is_synthetic(self) -> bool:
        return self.spec["source"]["kind"].startswith("synthetic")


@dataclass(frozen=True)
class RunData:
    """Per-run train/test pair produced from a manifest."""

    train: OrdinalDataset
    test: OrdinalDataset


def _manifest_dir():
    return importlib.resources.files("holearn") / "manifests"


def available_manifests() -> list[str]:
    names = []
    for entry in _manifest_dir().iterdir():
        if entry.name.endswith(".yaml"):
            names.append(entry.name[: -len(".yaml")])
    return sorted(names)


def load_manifest(name_or_path) -> DatasetManifest:
    """Load a shipped manifest by name, or any manifest by file path."""
    path = Path(str(name_or_path))
    if path.suffix in {".yaml", ".yml"} and path.exists():
        text = path.read_text(encoding="utf-8")
    else:
        resource = _manifest_dir() / f"{name_or_path}.yaml"
        if not resource.is_file():
            raise ManifestError(
                f"unknown manifest {name_or_path!r}; available: "
                + ", ".join(available_manifests())
            )
        text = resource.read_text(encoding="utf-8")
    spec = yaml.safe_load(text)
    for key in ("name", "k_classes", "source", "split"):
        if key not in spec:
            raise ManifestError(f"manifest is missing required key {key!r}")
    return DatasetManifest(
        name=spec["name"], k_classes=int(spec["k_classes"]), spec=spec
    )


def manifest_grid(manifest: DatasetManifest, n_features: int) -> list[TrainConfig]:
    """Resolve the manifest's tuning grid (cross product of listed values)."""
    grid_spec = manifest.spec.get("grid", "default")
    if grid_spec == "default":
        return default_grid(n_features)
    losses = [LossKind(v) for v in grid_spec.get("loss", ["mae"])]
    lams = [float(v) for v in grid_spec.get("lam", [1.0])]
    kernels = []
    for entry in grid_spec.get("kernels", [{"kind": "linear"}]):
        kind = entry["kind"]
        if kind == "rbf":
            gamma = entry.get("gamma")
            if gamma is None:
                gamma = float(entry["gamma_scale"]) / n_features
            kernels.append(KernelSpec("rbf", gamma=float(gamma)))
        elif kind == "polynomial":
            kernels.append(
                KernelSpec(
                    "polynomial",
                    degree=int(entry.get("degree", 3)),
                    coef0=float(entry.get("coef0", 0.0)),
                )
            )
        else:
            kernels.append(KernelSpec("linear"))
    return [
        TrainConfig(loss=loss, lam=lam, kernel=kern)
        for loss in losses
        for kern in kernels
        for lam in lams
    ]


# ---------------------------------------------------------------------------
# CSV-backed preparation
# ---------------------------------------------------------------------------


def _load_source_table(manifest: DatasetManifest, data_dir):
    source = manifest.spec["source"]
    path = Path(data_dir if data_dir is not None else "data") / source["file"]
    if not path.exists():
        raise DataFilesMissing(
            f"{manifest.name}: data file not found at {path}; supply the raw "
            f"CSV there (see README, section 'Benchmark data files')"
        )
    if source.get("has_header", True):
        header, rows = _read_rows(path)
    else:
        names = source["columns"]
        header, rows = names, _raw_rows(path, len(names))
    return header, rows, str(path)


def _raw_rows(path, width: int):
    import csv as _csv

    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in _csv.reader(fh) if row]
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise DatasetError(
                f"{path}: expected {width} columns, found {len(row)} at row {r}"
            )
    return [[c.strip() for c in row] for row in rows]


def _binning_from_spec(spec: dict) -> BinningSpec:
    classes = tuple(
        (float(lo), float(hi), int(cls)) for lo, hi, cls in spec.get("classes", [])
    )
    ambiguous = tuple(
        (float(lo), float(hi), int(ilo), int(ihi))
        for lo, hi, ilo, ihi in spec.get("ambiguous", [])
    )
    return BinningSpec(
        class_ranges=classes,
        ambiguous_ranges=ambiguous,
        upper_inclusive=bool(spec.get("upper_inclusive", True)),
    )


def _prepare_table(manifest: DatasetManifest, data_dir) -> OrdinalDataset:
    """Load, encode, and label the full table (before any splitting)."""
    header, rows, origin = _load_source_table(manifest, data_dir)
    schema = manifest.spec["schema"]
    target_name = schema["target"]
    if target_name not in header:
        raise ManifestError(f"{manifest.name}: no target column {target_name!r}")
    target_j = header.index(target_name)

    feature_names = schema.get("features", "rest")
    if feature_names == "rest":
        drop = set(schema.get("drop", [])) | {target_name}
        feature_names = [name for name in header if name not in drop]
    missing_tokens = {"", "?", "na", "n/a", "nan", "null"}
    if schema.get("drop_missing", False):
        feat_js = [header.index(name) for name in feature_names]
        rows = [
            row
            for row in rows
            if all(row[j].lower() not in missing_tokens for j in feat_js)
            and row[target_j].lower() not in missing_tokens
        ]
    if not rows:
        raise DatasetError(f"{origin}: no usable rows")

    features, out_names = _build_feature_matrix(
        rows,
        feature_names,
        [header.index(name) for name in feature_names],
        set(schema.get("categorical", [])),
        origin,
    )

    levels = manifest.spec.get("target_levels")
    if levels is not None:
        index = {str(level): i + 1 for i, level in enumerate(levels)}
        labels = []
        for r, row in enumerate(rows, start=1):
            value = row[target_j]
            if value not in index:
                raise DatasetError(
                    f"{origin}: unknown target level {value!r} at row {r}"
                )
            labels.append(LabelInterval(index[value], index[value]))
        keep = np.arange(len(labels))
    else:
        raw = np.array([float(row[target_j]) for row in rows])
        binning = _binning_from_spec(manifest.spec["binning"])
        binned, _counts = bin_numeric_target(raw, binning)
        keep = np.array([i for i, lab in enumerate(binned) if lab is not None])
        labels = [binned[i] for i in keep]
        features = features[keep]

    return OrdinalDataset(
        features=features,
        labels=tuple(labels),
        k_classes=manifest.k_classes,
        feature_names=tuple(out_names),
    )


def _split_fixed_precise(
    dataset: OrdinalDataset, train_precise: int, seed: int
) -> RunData:
    """Train on a fixed count of precise samples plus every interval sample."""
    precise = np.flatnonzero(dataset.precise_mask())
    interval = np.flatnonzero(~dataset.precise_mask())
    if precise.size < train_precise:
        raise DatasetError(
            f"need {train_precise} precise samples, found {precise.size}"
        )
    order = substream(seed, "split").permutation(precise.size)
    train_p = precise[order[:train_precise]]
    test_p = precise[order[train_precise:]]
    train_idx = np.sort(np.concatenate([train_p, interval]))
    return RunData(
        train=dataset.subset(train_idx), test=dataset.subset(np.sort(test_p))
    )


def _split_simulate(
    dataset: OrdinalDataset, train_size: int, sigma: float, seed: int
) -> RunData:
    """Uniform split, then interval simulation on the training side."""
    if not all(lab.is_precise() for lab in dataset.labels):
        raise DatasetError("simulation split expects an all-precise table")
    if dataset.n_samples <= train_size:
        raise DatasetError(
            f"need more than {train_size} rows, found {dataset.n_samples}"
        )
    order = substream(seed, "split").permutation(dataset.n_samples)
    train = dataset.subset(np.sort(order[:train_size]))
    test = dataset.subset(np.sort(order[train_size:]))
    train = simulate_intervals(train, SimulationParams(sigma=sigma, seed=seed))
    return RunData(train=train, test=test)


def prepare_run(manifest: DatasetManifest, data_dir=None, seed: int = 0) -> RunData:
    """Produce the seed-specific train/test pair a benchmark run uses."""
    source = manifest.spec["source"]
    if source["kind"] == "synthetic_progression":
        return _synthetic_progression(manifest, seed)
    if source["kind"] == "synthetic_clusters":
        return _synthetic_clusters(manifest, seed)
    if source["kind"] != "csv":
        raise ManifestError(f"unknown source kind {source['kind']!r}")

    dataset = _prepare_table(manifest, data_dir)
    split = manifest.spec["split"]
    if split["kind"] == "fixed_precise_train":
        return _split_fixed_precise(dataset, int(split["train_precise"]), seed)
    if split["kind"] == "simulate_train":
        sim = manifest.spec.get("simulate", {}) or {}
        return _split_simulate(
            dataset,
            int(split["train_size"]),
            float(sim.get("sigma", 1.0)),
            seed,
        )
    raise ManifestError(f"unknown split kind {split['kind']!r}")


# ---------------------------------------------------------------------------
# Synthetic sources
# ---------------------------------------------------------------------------


def _ordinal_blob(rng, classes, params) -> np.ndarray:
    """Noisy features whose informative direction tracks the class index."""
    classes = np.asarray(classes, dtype=np.float64)
    n = classes.size
    n_features = int(params.get("n_features", 6))
    separation = float(params.get("separation", 1.6))
    noise = float(params.get("noise", 1.0))
    X = rng.normal(0.0, noise, size=(n, n_features))
    X[:, 0] += separation * classes
    if n_features > 1:
        X[:, 1] += 0.5 * separation * classes
    return X


def _synthetic_progression(manifest: DatasetManifest, seed: int) -> RunData:
    """Four-class progression-speed stand-in with censored interval labels.

    The training side mixes per-class precise samples with right-censored
    interval samples (labels known only up to a class range); the test
    side is fully precise.
    """
    params = manifest.spec["source"].get("params", {})
    rng = substream(seed, "synthetic")
    k = manifest.k_classes
    precise_counts = [int(c) for c in params.get("precise_counts", [55, 49, 54, 46])]
    interval_specs = params.get(
        "intervals", [{"lo": 2, "hi": 4, "count": 55}, {"lo": 3, "hi": 4, "count": 90}]
    )
    test_per_class = int(params.get("test_per_class", 60))

    true_classes: list[int] = []
    labels: list[LabelInterval] = []
    for cls, count in enumerate(precise_counts, start=1):
        true_classes.extend([cls] * count)
        labels.extend([LabelInterval(cls, cls)] * count)
    for entry in interval_specs:
        lo, hi, count = int(entry["lo"]), int(entry["hi"]), int(entry["count"])
        drawn = rng.integers(lo, hi + 1, size=count)
        true_classes.extend(int(c) for c in drawn)
        labels.extend([LabelInterval(lo, hi)] * count)

    train = OrdinalDataset(
        features=_ordinal_blob(rng, true_classes, params),
        labels=tuple(labels),
        k_classes=k,
    )
    test_classes = np.repeat(np.arange(1, k + 1), test_per_class)
    test = OrdinalDataset(
        features=_ordinal_blob(rng, test_classes, params),
        labels=tuple(LabelInterval(int(c), int(c)) for c in test_classes),
        k_classes=k,
    )
    return RunData(train=train, test=test)


def _synthetic_clusters(manifest: DatasetManifest, seed: int) -> RunData:
    """Well-separated per-class blobs (an easy sanity-check fixture)."""
    params = manifest.spec["source"].get("params", {})
    rng = substream(seed, "synthetic")
    k = manifest.k_classes
    per_class_train = int(params.get("train_per_class", 10))
    per_class_test = int(params.get("test_per_class", 10))
    spread = float(params.get("noise", 0.3))
    gap = float(params.get("gap", 6.0))
    n_features = int(params.get("n_features", 2))

    def blob(count_per_class):
        classes = np.repeat(np.arange(1, k + 1), count_per_class)
        X = rng.normal(0.0, spread, size=(classes.size, n_features))
        X[:, 0] += gap * classes
        labels = tuple(LabelInterval(int(c), int(c)) for c in classes)
        return OrdinalDataset(features=X, labels=labels, k_classes=k)

    return RunData(train=blob(per_class_train), test=blob(per_class_test))
