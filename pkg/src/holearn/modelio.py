"""Versioned model files (canonical JSON, value-exact round trips)."""

from __future__ import annotations

import json

import numpy as np

from .kernels import KernelSpec
from .model import HybridOrdinalModel, TrainConfig
from .reduction import LossKind
from .solver import FittedScorer

SCHEMA_VERSION = 1


class ModelFileError(ValueError):
    """Raised for unreadable or incompatible model files."""


def _array(a) -> list:
    return np.asarray(a).tolist()


def model_to_document(model: HybridOrdinalModel) -> dict:
    scorer = model.scorer
    return {
        "schema_version": SCHEMA_VERSION,
        "k_classes": model.k_classes,
        "n_features_in": model.n_features_in,
        "loss": model.config.loss.value,
        "lam": model.config.lam,
        "tol": model.config.tol,
        "kernel": scorer.kernel.to_dict(),
        "intercepts": _array(scorer.intercepts),
        "support": {
            "indices": _array(scorer.support_indices),
            "rows": _array(scorer.support_rows),
            "entries": [
                [int(rank), int(row), float(alpha), float(sign)]
                for rank, row, alpha, sign in zip(
                    scorer.sup_rank, scorer.sup_row, scorer.sup_alpha, scorer.sup_sign
                )
            ],
        },
        "transforms": {
            "retained": None if model.retained is None else _array(model.retained),
            "mean": None if model.feature_mean is None else _array(model.feature_mean),
            "std": None if model.feature_std is None else _array(model.feature_std),
        },
        "solver": {
            "converged": model.solver_converged,
            "iterations": model.solver_iterations,
            "kkt_violation": model.kkt_violation,
        },
        "config_label": model.config.label(),
    }


def dumps_model(model: HybridOrdinalModel) -> str:
    """Canonical serialization: stable key order, exact float round trip."""
    return json.dumps(model_to_document(model), sort_keys=True, indent=1) + "\n"


def save_model(model: HybridOrdinalModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(model))


def model_from_document(doc: dict) -> HybridOrdinalModel:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelFileError(f"unsupported model schema version: {version!r}")
    support = doc["support"]
    entries = support["entries"]
    d_used = np.asarray(support["rows"], dtype=np.float64)
    if d_used.size == 0:
        d_used = d_used.reshape(0, 0)
    kernel = KernelSpec.from_dict(doc["kernel"])
    scorer = FittedScorer(
        support_rows=d_used,
        support_indices=np.asarray(support["indices"], dtype=np.int64),
        sup_row=np.array([e[1] for e in entries], dtype=np.int64),
        sup_rank=np.array([e[0] for e in entries], dtype=np.int64),
        sup_alpha=np.array([e[2] for e in entries], dtype=np.float64),
        sup_sign=np.array([e[3] for e in entries], dtype=np.float64),
        kernel=kernel,
        intercepts=np.asarray(doc["intercepts"], dtype=np.float64),
        k_classes=int(doc["k_classes"]),
    )
    transforms = doc["transforms"]
    config = TrainConfig(
        loss=LossKind(doc["loss"]),
        lam=float(doc["lam"]),
        kernel=kernel,
        tol=float(doc["tol"]),
        standardize=transforms["mean"] is not None,
        screen=transforms["retained"] is not None,
    )
    solver_info = doc["solver"]
    return HybridOrdinalModel(
        scorer=scorer,
        config=config,
        k_classes=int(doc["k_classes"]),
        n_features_in=int(doc["n_features_in"]),
        retained=(
            None
            if transforms["retained"] is None
            else np.asarray(transforms["retained"], dtype=np.int64)
        ),
        feature_mean=(
            None
            if transforms["mean"] is None
            else np.asarray(transforms["mean"], dtype=np.float64)
        ),
        feature_std=(
            None
            if transforms["std"] is None
            else np.asarray(transforms["std"], dtype=np.float64)
        ),
        solver_iterations=int(solver_info["iterations"]),
        solver_converged=bool(solver_info["converged"]),
        kkt_violation=float(solver_info["kkt_violation"]),
    )


def load_model(path) -> HybridOrdinalModel:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFileError(f"{path}: not a valid model file ({exc})") from None
    return model_from_document(doc)
