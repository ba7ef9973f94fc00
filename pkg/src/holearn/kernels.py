"""Kernel evaluation and dense Gram matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KERNEL_KINDS = ("linear", "rbf", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    """One of ``linear``, ``rbf`` (needs ``gamma > 0``) or ``polynomial``."""

    kind: str
    gamma: float | None = None
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf":
            if self.gamma is None or not self.gamma > 0.0:
                raise ValueError("rbf kernel needs gamma > 0")
        if self.kind == "polynomial" and self.degree < 1:
            raise ValueError("polynomial kernel needs degree >= 1")

    @property
    def complexity_rank(self) -> int:
        # tie-break order for model selection: simpler kernels first
        return KERNEL_KINDS.index(self.kind)

    def label(self) -> str:
        if self.kind == "rbf":
            return f"rbf(gamma={self.gamma:g})"
        if self.kind == "polynomial":
            return f"polynomial(degree={self.degree},coef0={self.coef0:g})"
        return "linear"

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "rbf":
            out["gamma"] = self.gamma
        if self.kind == "polynomial":
            out["degree"] = self.degree
            out["coef0"] = self.coef0
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        return cls(
            kind=data["kind"],
            gamma=data.get("gamma"),
            degree=int(data.get("degree", 3)),
            coef0=float(data.get("coef0", 0.0)),
        )


def kernel_eval(a, b, spec: KernelSpec) -> float:
    """k(a, b) for a single vector pair."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if spec.kind == "linear":
        return float(a @ b)
    if spec.kind == "rbf":
        diff = a - b
        return float(np.exp(-spec.gamma * (diff @ diff)))
    return float((a @ b + spec.coef0) ** spec.degree)


def gram(X, Y=None, spec: KernelSpec = KernelSpec("linear")) -> np.ndarray:
    """Kernel matrix with entry (i, j) = k(X[i], Y[j]).

    ``Y=None`` means the symmetric case ``Y = X``; the result is then made
    exactly symmetric by mirroring the lower triangle.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    symmetric = Y is None
    Ym = X if symmetric else np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != Ym.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Ym.shape[1]}")

    if spec.kind == "linear":
        out = X @ Ym.T
    elif spec.kind == "rbf":
        sq = (
            np.sum(X * X, axis=1)[:, None]
            + np.sum(Ym * Ym, axis=1)[None, :]
            - 2.0 * (X @ Ym.T)
        )
        np.maximum(sq, 0.0, out=sq)
        if symmetric:
            np.fill_diagonal(sq, 0.0)
        out = np.exp(-spec.gamma * sq)
    else:
        out = (X @ Ym.T + spec.coef0) ** spec.degree

    if symmetric:
        lower = np.tril(out)
        out = lower + np.tril(out, -1).T
    return out
