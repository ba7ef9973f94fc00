"""Command-line interface.

Exit codes are a stable scripting contract: 0 success, 2 usage or
validation failure, 3 solver convergence warning (output still written),
4 benchmark finished with failed runs (partial report still emitted).
"""

from __future__ import annotations

import csv
import os
import sys

import click
import numpy as np

from .data import ColumnSchema, DatasetError, OrdinalDataset, load_csv
from .kernels import KernelSpec
from .manifests import DataFilesMissing, ManifestError, load_manifest
from .model import TrainConfig, default_grid, fit, grid_search_cv
from .modelio import ModelFileError, load_model, save_model
from .reduction import LossKind
from .simulate import SimulationParams, simulate_intervals
from .solver import SolverError

CONTEXT = {"max_content_width": 80, "terminal_width": 80}


def _fail(message: str, code: int = 2):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _comma_list(text):
    if text is None:
        return None
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _schema_options(fn):
    fn = click.option(
        "--features",
        default=None,
        help="Comma-separated feature columns (default: all non-label columns).",
    )(fn)
    fn = click.option("--label", default=None, help="Single precise-label column.")(fn)
    fn = click.option("--lo-col", default=None, help="Interval lower-bound column.")(fn)
    fn = click.option("--hi-col", default=None, help="Interval upper-bound column.")(fn)
    fn = click.option("--group-col", default=None, help="Group-id column for fold splitting.")(fn)
    fn = click.option(
        "--categorical",
        default=None,
        help="Comma-separated categorical feature columns (one-hot encoded).",
    )(fn)
    fn = click.option(
        "--k-classes", type=int, default=None, help="Total class count (default: inferred)."
    )(fn)
    return fn


def _build_schema(features, label, lo_col, hi_col, group_col, categorical, k_classes):
    try:
        return ColumnSchema(
            label=label,
            lo=lo_col,
            hi=hi_col,
            features=_comma_list(features),
            group=group_col,
            categorical=_comma_list(categorical) or (),
            k_classes=k_classes,
        )
    except DatasetError as exc:
        _fail(str(exc))


def _load_dataset(data, schema) -> OrdinalDataset:
    try:
        return load_csv(data, schema)
    except (DatasetError, OSError) as exc:
        _fail(str(exc))


@click.group(context_settings=CONTEXT)
def main():
    """Ordinal classification with mixed precise and interval labels."""


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


@main.command()
@click.option("--data", required=True, type=click.Path(), help="Input CSV (precise labels).")
@click.option("--out", required=True, type=click.Path(), help="Output CSV path.")
@_schema_options
@click.option("--sigma", type=float, default=1.0, show_default=True, help="Bound-distribution spread.")
@click.option("--seed", type=int, default=0, show_default=True, help="Base seed.")
def simulate(data, out, features, label, lo_col, hi_col, group_col, categorical, k_classes, sigma, seed):
    """Replace precise labels with simulated interval labels."""
    if sigma <= 0:
        _fail("--sigma must be positive")
    if seed < 0:
        _fail("--seed must be non-negative")
    schema = _build_schema(features, label, lo_col, hi_col, group_col, categorical, k_classes)
    label_col = label if label is not None else lo_col

    try:
        with open(data, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        _fail(str(exc))
    if not rows:
        _fail(f"{data}: empty file")
    header, body = rows[0], rows[1:]
    header = [name.strip() for name in header]
    for needed in filter(None, [label_col, hi_col]):
        if needed not in header:
            _fail(f"{data}: no column named {needed!r}")
    lo_j = header.index(label_col)
    hi_j = header.index(hi_col) if hi_col is not None else lo_j

    try:
        y = []
        for r, row in enumerate(body, start=1):
            lo_v, hi_v = int(row[lo_j]), int(row[hi_j])
            if lo_v != hi_v:
                raise DatasetError(f"interval label [{lo_v}, {hi_v}] at row {r}; input must be precise")
            y.append(lo_v)
    except (ValueError, DatasetError, IndexError) as exc:
        _fail(f"invalid input labels: {exc}")
    k = k_classes if k_classes is not None else max(y)
    if any(v < 1 or v > k for v in y):
        _fail(f"labels outside [1, {k}]")

    from .data import LabelInterval

    carrier = OrdinalDataset(
        features=np.zeros((len(y), 1)),
        labels=tuple(LabelInterval(v, v) for v in y),
        k_classes=max(k, 2),
    )
    try:
        simulated = simulate_intervals(carrier, SimulationParams(sigma=sigma, seed=seed))
    except ValueError as exc:
        _fail(str(exc))

    out_header = list(header)
    out_header[lo_j] = f"{label_col}_lo"
    insert_at = lo_j + 1
    if hi_col is not None:
        out_header[hi_j] = f"{label_col}_hi"
    else:
        out_header.insert(insert_at, f"{label_col}_hi")
    with open(out, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(out_header)
        for row, lab in zip(body, simulated.labels):
            cells = [c.strip() for c in row]
            cells[lo_j] = str(lab.lo)
            if hi_col is not None:
                cells[hi_j] = str(lab.hi)
            else:
                cells.insert(insert_at, str(lab.hi))
            writer.writerow(cells)
    n_precise = sum(1 for lab in simulated.labels if lab.is_precise())
    click.echo(f"wrote {out}: {n_precise} precise, {len(y) - n_precise} interval")


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


@main.command()
@click.option("--data", required=True, type=click.Path(), help="Training CSV.")
@click.option("--model-out", required=True, type=click.Path(), help="Model file to write.")
@_schema_options
@click.option("--loss", type=click.Choice(["mae", "zero_one"]), default="mae", show_default=True)
@click.option("--lam", type=float, default=1.0, show_default=True, help="Dual box bound.")
@click.option("--kernel", type=click.Choice(["linear", "rbf", "polynomial"]), default="linear", show_default=True)
@click.option("--gamma", type=float, default=None, help="rbf width (default: 1/n_features).")
@click.option("--degree", type=int, default=3, show_default=True, help="Polynomial degree.")
@click.option("--coef0", type=float, default=0.0, show_default=True, help="Polynomial offset.")
@click.option("--tol", type=float, default=1e-3, show_default=True, help="Solver KKT tolerance.")
@click.option("--max-passes", type=int, default=None, help="Solver update budget (default: 10x variables).")
@click.option("--standardize/--no-standardize", default=True, show_default=True)
@click.option("--screen", is_flag=True, help="Screen redundant features before fitting.")
@click.option("--grid", "use_grid", is_flag=True, help="Tune over the default grid first.")
@click.option("--folds", type=int, default=10, show_default=True, help="CV folds for --grid.")
@click.option("--seed", type=int, default=0, show_default=True, help="Fold seed for --grid.")
def train(data, model_out, features, label, lo_col, hi_col, group_col, categorical,
          k_classes, loss, lam, kernel, gamma, degree, coef0, tol, max_passes,
          standardize, screen, use_grid, folds, seed):
    """Fit an ordinal model and write a model file."""
    if lam <= 0:
        _fail("--lam must be positive")
    if tol <= 0:
        _fail("--tol must be positive")
    if seed < 0:
        _fail("--seed must be non-negative")
    schema = _build_schema(features, label, lo_col, hi_col, group_col, categorical, k_classes)
    dataset = _load_dataset(data, schema)

    if kernel == "rbf":
        spec = KernelSpec("rbf", gamma=gamma if gamma is not None else 1.0 / dataset.n_features)
    elif kernel == "polynomial":
        spec = KernelSpec("polynomial", degree=degree, coef0=coef0)
    else:
        spec = KernelSpec("linear")
    config = TrainConfig(
        loss=LossKind(loss),
        lam=lam,
        kernel=spec,
        tol=tol,
        max_passes=max_passes,
        standardize=standardize,
        screen=screen,
    )
    if use_grid:
        try:
            result = grid_search_cv(dataset, default_grid(dataset.n_features), folds=folds, seed=seed)
        except (DatasetError, ValueError) as exc:
            _fail(str(exc))
        config = result.best
        click.echo(f"grid search selected: {config.label()}")

    try:
        model = fit(dataset, config)
    except (SolverError, DatasetError) as exc:
        _fail(str(exc))
    save_model(model, model_out)
    train_acc = float(np.mean([int(p) in lab for p, lab in zip(model.predict(dataset.features), dataset.labels)]))
    click.echo(f"wrote {model_out}: training accuracy {train_acc:.4f}")
    if not model.solver_converged:
        click.echo(
            f"warning: solver stopped before reaching tolerance "
            f"(kkt violation {model.kkt_violation:.2e}); model flagged",
            err=True,
        )
        sys.exit(3)


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(), help="Model file from train.")
@click.option("--data", required=True, type=click.Path(), help="Feature CSV (header row).")
@click.option("--out", required=True, type=click.Path(), help="Output CSV path.")
@click.option("--features", default=None, help="Comma-separated feature columns (default: all).")
@click.option("--scores", is_flag=True, help="Also write the threshold scores.")
def predict(model_path, data, out, features, scores):
    """Predict classes for a feature CSV using a saved model."""
    try:
        model = load_model(model_path)
    except (ModelFileError, OSError) as exc:
        _fail(str(exc))

    try:
        with open(data, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        _fail(str(exc))
    if len(rows) < 2:
        _fail(f"{data}: no data rows")
    header = [name.strip() for name in rows[0]]
    wanted = _comma_list(features) or header
    try:
        cols = [header.index(name) for name in wanted]
    except ValueError as exc:
        _fail(f"{data}: {exc}")
    try:
        X = np.array([[float(row[j]) for j in cols] for row in rows[1:]])
    except (ValueError, IndexError) as exc:
        _fail(f"{data}: non-numeric or ragged feature data ({exc})")
    if X.shape[1] != model.n_features_in:
        _fail(f"model expects {model.n_features_in} features, file has {X.shape[1]}")

    values = model.decision_values(X)
    pred = 1 + np.count_nonzero(values < 0.0, axis=1)
    with open(out, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        head = ["prediction"]
        if scores:
            head += [f"score_{k + 1}" for k in range(values.shape[1])]
        writer.writerow(head)
        for i in range(X.shape[0]):
            row = [str(int(pred[i]))]
            if scores:
                row += [repr(float(v)) for v in values[i]]
            writer.writerow(row)
    click.echo(f"wrote {out}: {X.shape[0]} predictions")


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------


@main.command()
@click.option("--manifest", "manifest_name", required=True, help="Manifest name or YAML path.")
@click.option("--runs", type=int, default=30, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Base seed.")
@click.option(
    "--methods",
    default="hol,no_interval,mid_interval",
    show_default=True,
    help="Comma-separated subset of hol,no_interval,mid_interval.",
)
@click.option("--data-dir", type=click.Path(), default=None, help="Directory with raw data files (default: ./data).")
@click.option("--folds", type=int, default=10, show_default=True, help="CV folds for tuning.")
@click.option("--jobs", type=int, default=None, help="Parallel runs (default: CPU count).")
@click.option("--freeze-config", is_flag=True, help="Tune once on the first run and reuse the config.")
@click.option("--out-csv", type=click.Path(), default=None, help="Write the summary CSV here.")
@click.option("--out-json", type=click.Path(), default=None, help="Write the full JSON report here.")
@click.option("--out-plot", type=click.Path(), default=None, help="Write long-format plot data here.")
def benchmark(manifest_name, runs, seed, methods, data_dir, folds, jobs,
              freeze_config, out_csv, out_json, out_plot):
    """Run the repeated benchmark protocol for one dataset manifest."""
    from .evaluate import emit_report, run_benchmark

    if runs < 1:
        _fail("--runs must be >= 1")
    if seed < 0:
        _fail("--seed must be non-negative")
    try:
        manifest = load_manifest(manifest_name)
    except ManifestError as exc:
        _fail(str(exc))
    method_list = _comma_list(methods)
    if jobs is None:
        jobs = os.cpu_count() or 1

    try:
        report = run_benchmark(
            manifest,
            methods=method_list,
            runs=runs,
            base_seed=seed,
            data_dir=data_dir,
            folds=folds,
            jobs=jobs,
            freeze_config=freeze_config,
        )
    except (DataFilesMissing, ManifestError, ValueError) as exc:
        _fail(str(exc))

    if not any(report.records[m] for m in report.methods):
        _fail(f"all runs failed: {'; '.join(report.failures)}", code=4)
    click.echo(emit_report(report, "table"), nl=False)
    if out_csv:
        emit_report(report, "csv", out_csv)
    if out_json:
        emit_report(report, "json", out_json)
    if out_plot:
        emit_report(report, "plot", out_plot)
    if report.failures:
        sys.exit(4)


if __name__ == "__main__":
    main()
