"""Test metrics, repeated benchmark runs, and report emission.

The benchmark protocol per run: derive the run seed, prepare the
train/test pair from the manifest (splitting and, where the manifest says
so, interval simulation), then for each method variant tune on the
training set by grid-search cross-validation, refit with the winning
config, and score the precise-labeled test set. Reports aggregate the
per-run metrics as mean/std.

The deviation metric is the mean absolute difference between predicted
and true class (reports alias it as "MSPE").
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import OrdinalDataset
from .manifests import DatasetManifest, RunData, manifest_grid, prepare_run
from .model import (
    HybridOrdinalModel,
    fit,
    grid_search_cv,
    to_mid_interval,
    to_no_interval,
)

METHODS = ("hol", "no_interval", "mid_interval")


@dataclass(frozen=True)
class MetricSet:
    overall_acc: float
    avg_class_acc: float
    mean_abs_deviation: float


def compute_metrics(predicted, truth, k_classes: int) -> MetricSet:
    """Overall accuracy, class-averaged accuracy, and mean class deviation.

    ``truth`` must be precise class indices. Classes absent from the
    truth vector are left out of the class-wise average (with a warning).
    """
    pred = np.asarray(predicted, dtype=np.int64)
    true = np.asarray(truth, dtype=np.int64)
    if pred.shape != true.shape or pred.ndim != 1:
        raise ValueError("predicted and truth must be equal-length vectors")
    if pred.size == 0:
        raise ValueError("cannot compute metrics on empty input")
    overall = float(np.mean(pred == true))
    class_accs = []
    absent = []
    for cls in range(1, k_classes + 1):
        mask = true == cls
        if not mask.any():
            absent.append(cls)
            continue
        class_accs.append(float(np.mean(pred[mask] == true[mask])))
    if absent:
        warnings.warn(
            f"classes {absent} absent from truth; excluded from the "
            "class-wise average",
            stacklevel=2,
        )
    return MetricSet(
        overall_acc=overall,
        avg_class_acc=float(np.mean(class_accs)),
        mean_abs_deviation=float(np.mean(np.abs(pred - true))),
    )


# ---------------------------------------------------------------------------
# Benchmark orchestration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    run_index: int
    seed: int
    metrics: MetricSet
    config_label: str


@dataclass(frozen=True)
class BenchmarkReport:
    dataset: str
    runs: int
    base_seed: int
    methods: tuple[str, ...]
    records: dict  # method -> list[RunRecord], ordered by run index
    failures: tuple[str, ...]

    def _metric_arrays(self, method: str):
        recs = self.records[method]
        return {
            "overall_acc": np.array([r.metrics.overall_acc for r in recs]),
            "avg_class_acc": np.array([r.metrics.avg_class_acc for r in recs]),
            "mad": np.array([r.metrics.mean_abs_deviation for r in recs]),
        }

    def summary_rows(self) -> list[dict]:
        rows = []
        for method in self.methods:
            recs = self.records[method]
            if not recs:
                continue
            arrays = self._metric_arrays(method)
            row = {"dataset": self.dataset, "method": method, "runs": len(recs)}
            for name, values in arrays.items():
                row[f"{name}_mean"] = float(values.mean())
                row[f"{name}_std"] = (
                    float(values.std(ddof=1)) if values.size > 1 else 0.0
                )
            row["best_config_mode"] = Counter(
                r.config_label for r in recs
            ).most_common(1)[0][0]
            rows.append(row)
        return rows

    def method_mean(self, method: str, metric: str = "overall_acc") -> float:
        return float(self._metric_arrays(method)[metric].mean())


def _variant(train: OrdinalDataset, method: str, seed: int) -> OrdinalDataset:
    if method == "hol":
        return train
    if method == "no_interval":
        return to_no_interval(train)
    if method == "mid_interval":
        return to_mid_interval(train, seed)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _one_run(args):
    (manifest, methods, data_dir, seed, run_index, folds, frozen) = args
    run = prepare_run(manifest, data_dir=data_dir, seed=seed)
    out = {}
    for method in methods:
        variant = _variant(run.train, method, seed)
        if frozen is not None and method in frozen:
            best = frozen[method]
        else:
            grid = manifest_grid(manifest, variant.n_features)
            best = grid_search_cv(variant, grid, folds=folds, seed=seed).best
        model = fit(variant, best)
        pred = model.predict(run.test.features)
        truth = run.test.lower_bounds()
        metrics = compute_metrics(pred, truth, run.test.k_classes)
        out[method] = RunRecord(
            run_index=run_index,
            seed=seed,
            metrics=metrics,
            config_label=best.label(),
        )
    return run_index, out


def run_benchmark(
    manifest: DatasetManifest,
    methods=METHODS,
    runs: int = 30,
    base_seed: int = 0,
    data_dir=None,
    folds: int = 10,
    jobs: int = 1,
    freeze_config: bool = False,
) -> BenchmarkReport:
    """Repeat the tuning/refit/test protocol ``runs`` times and aggregate.

    Run ``r`` uses seed ``base_seed + r`` for its split, simulation, fold,
    and tie-break substreams. ``freeze_config=True`` tunes once on the
    first run and reuses the winning config for the rest. Failed runs are
    recorded and excluded from the aggregates.
    """
    methods = tuple(methods)
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if runs < 1:
        raise ValueError("runs must be >= 1")

    frozen = None
    if freeze_config:
        first = prepare_run(manifest, data_dir=data_dir, seed=base_seed)
        frozen = {}
        for method in methods:
            variant = _variant(first.train, method, base_seed)
            grid = manifest_grid(manifest, variant.n_features)
            frozen[method] = grid_search_cv(
                variant, grid, folds=folds, seed=base_seed
            ).best

    tasks = [
        (manifest, methods, data_dir, base_seed + r, r, folds, frozen)
        for r in range(runs)
    ]
    results: dict[int, dict] = {}
    failures: list[str] = []
    if jobs > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {r: pool.submit(_one_run, task) for r, task in enumerate(tasks)}
            for r in range(runs):
                try:
                    idx, out = futures[r].result()
                    results[idx] = out
                except Exception as exc:  # noqa: BLE001 - recorded, not hidden
                    failures.append(f"run {r}: {exc}")
    else:
        for r, task in enumerate(tasks):
            try:
                idx, out = _one_run(task)
                results[idx] = out
            except Exception as exc:  # noqa: BLE001 - recorded, not hidden
                failures.append(f"run {r}: {exc}")

    records = {method: [] for method in methods}
    for r in sorted(results):
        for method in methods:
            records[method].append(results[r][method])
    return BenchmarkReport(
        dataset=manifest.name,
        runs=runs,
        base_seed=base_seed,
        methods=methods,
        records=records,
        failures=tuple(failures),
    )


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

CSV_COLUMNS = [
    "dataset",
    "method",
    "runs",
    "overall_acc_mean",
    "overall_acc_std",
    "avg_class_acc_mean",
    "avg_class_acc_std",
    "mad_mean",
    "mad_std",
    "best_config_mode",
]


def _report_csv(report: BenchmarkReport) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in report.summary_rows():
        writer.writerow({col: repr(row[col]) if isinstance(row[col], float) else row[col] for col in CSV_COLUMNS})
    return buf.getvalue()


def _report_json(report: BenchmarkReport) -> str:
    doc = {
        "dataset": report.dataset,
        "runs": report.runs,
        "base_seed": report.base_seed,
        "failures": list(report.failures),
        "summary": report.summary_rows(),
        "per_run": {
            method: [
                {
                    "run_index": rec.run_index,
                    "seed": rec.seed,
                    "overall_acc": rec.metrics.overall_acc,
                    "avg_class_acc": rec.metrics.avg_class_acc,
                    "mad": rec.metrics.mean_abs_deviation,
                    "config": rec.config_label,
                }
                for rec in report.records[method]
            ]
            for method in report.methods
        },
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _report_table(report: BenchmarkReport) -> str:
    lines = [
        f"dataset: {report.dataset}  (runs={report.runs}, base_seed={report.base_seed})",
        f"{'method':<14}{'overall ACC':<16}{'avg class ACC':<16}{'MSPE (mad)':<16}",
    ]
    for row in report.summary_rows():
        cells = [
            f"{row['overall_acc_mean']:.2f} ({row['overall_acc_std']:.3f})",
            f"{row['avg_class_acc_mean']:.2f} ({row['avg_class_acc_std']:.3f})",
            f"{row['mad_mean']:.2f} ({row['mad_std']:.3f})",
        ]
        lines.append(
            f"{row['method']:<14}{cells[0]:<16}{cells[1]:<16}{cells[2]:<16}"
        )
    if report.failures:
        lines.append(f"failed runs: {len(report.failures)}")
        lines.extend(f"  {msg}" for msg in report.failures)
    return "\n".join(lines) + "\n"


def _report_plot_data(report: BenchmarkReport) -> str:
    """Long-format per-metric bar values (for external plotting)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dataset", "metric", "method", "mean", "std"])
    for metric in ("overall_acc", "avg_class_acc", "mad"):
        for row in report.summary_rows():
            writer.writerow(
                [
                    row["dataset"],
                    metric,
                    row["method"],
                    repr(row[f"{metric}_mean"]),
                    repr(row[f"{metric}_std"]),
                ]
            )
    return buf.getvalue()


_FORMATS = {
    "csv": _report_csv,
    "json": _report_json,
    "table": _report_table,
    "plot": _report_plot_data,
}


def emit_report(report: BenchmarkReport, fmt: str = "table", path=None) -> str:
    """Render the report; write it to ``path`` when given."""
    if not any(report.records[m] for m in report.methods):
        raise ValueError("report has no successful runs to emit")
    if fmt not in _FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {sorted(_FORMATS)}")
    text = _FORMATS[fmt](report)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text
