"""Dual quadratic program for the coupled threshold classifiers.

Training reduces to

    min_a  0.5 * sum_{uv} a_u a_v z_u z_v k(x_u, x_v) - sum_u a_u
    s.t.   sum_{u in block k} z_u a_u = 0   for every threshold k,
           0 <= a_u <= lam,

with one dual variable per (threshold, sample) pair that carries a
nonzero training weight. All thresholds share the expansion
``h(x) = sum_u a_u z_u k(x_u, x)``; only the intercepts differ, and they
are recovered afterwards from the active constraints.

Two solvers are provided: :func:`solve_smo` (pairwise updates inside each
block, the production path, with a compiled inner loop when available)
and :func:`solve_projected_gradient` (a dense projected-gradient method
restricted to small problems, used as an independent cross-check).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._core import smo_core
from .data import OrdinalDataset
from .kernels import KernelSpec, gram
from .reduction import LossKind, encode_dataset


class SolverError(RuntimeError):
    """Raised for unusable dual problems or solver misuse."""


@dataclass(frozen=True)
class DualProblem:
    """Assembled dual QP; variables are sorted by threshold block."""

    gram: np.ndarray        # (n, n) kernel matrix over training rows
    var_sample: np.ndarray  # (V,) training row of each variable
    var_rank: np.ndarray    # (V,) 0-based threshold index
    var_sign: np.ndarray    # (V,) +1.0 or -1.0
    block_start: np.ndarray  # (K,) offsets; block k = [start[k], start[k+1])
    n_thresholds: int
    lam: float
    loss_kind: LossKind

    @property
    def n_samples(self) -> int:
        return self.gram.shape[0]

    @property
    def n_variables(self) -> int:
        return self.var_sample.shape[0]

    def block(self, k: int) -> slice:
        return slice(int(self.block_start[k]), int(self.block_start[k + 1]))


@dataclass(frozen=True)
class DualSolution:
    """Solver output; ``margins[i]`` is h(x_i) over the training rows."""

    alpha: np.ndarray
    objective: float
    iterations: int
    converged: bool
    kkt_violation: float
    margins: np.ndarray


def build_dual(
    dataset: OrdinalDataset,
    kernel: KernelSpec,
    lam: float,
    kind: LossKind,
) -> DualProblem:
    """Enumerate dual variables and materialize the kernel matrix.

    A variable exists for every (threshold, sample) pair with nonzero
    training weight, so under ``MAE`` every pair the sample's interval
    does not straddle, and under ``ZERO_ONE`` only the pairs at the
    interval boundaries. Thresholds that end up with no variables are
    kept as empty blocks (their intercepts get interpolated later).
    A sample labeled with the full class range contributes nothing.
    """
    if not lam > 0.0:
        raise SolverError(f"lam must be positive, got {lam}")
    signs, weights = encode_dataset(dataset.labels, dataset.k_classes, kind)
    n_thresholds = dataset.k_classes - 1
    var_sample: list[int] = []
    var_rank: list[int] = []
    var_sign: list[float] = []
    block_start = np.zeros(n_thresholds + 1, dtype=np.intp)
    for k in range(n_thresholds):
        rows = np.flatnonzero(weights[:, k] != 0.0)
        var_sample.extend(int(i) for i in rows)
        var_rank.extend([k] * rows.size)
        var_sign.extend(float(signs[i, k]) for i in rows)
        block_start[k + 1] = len(var_sample)
    if not var_sample:
        raise SolverError("no trainable (threshold, sample) pairs in dataset")
    return DualProblem(
        gram=np.ascontiguousarray(gram(dataset.features, None, kernel)),
        var_sample=np.array(var_sample, dtype=np.int32),
        var_rank=np.array(var_rank, dtype=np.int32),
        var_sign=np.array(var_sign, dtype=np.float64),
        block_start=block_start,
        n_thresholds=n_thresholds,
        lam=lam,
        loss_kind=kind,
    )


def _margins(problem: DualProblem, alpha: np.ndarray) -> np.ndarray:
    """h(x_i) for all training rows under coefficient vector ``alpha``."""
    coef = alpha * problem.var_sign
    return problem.gram[:, problem.var_sample] @ coef


def dual_objective(problem: DualProblem, alpha: np.ndarray, margins=None) -> float:
    if margins is None:
        margins = _margins(problem, alpha)
    quad = float(np.dot(alpha * problem.var_sign, margins[problem.var_sample]))
    return 0.5 * quad - float(alpha.sum())


def kkt_violation(problem: DualProblem, alpha: np.ndarray, margins=None) -> float:
    """Largest per-block optimality gap (zero at an exact solution)."""
    if margins is None:
        margins = _margins(problem, alpha)
    worst = 0.0
    lam = problem.lam
    for k in range(problem.n_thresholds):
        blk = problem.block(k)
        z = problem.var_sign[blk]
        a = alpha[blk]
        if z.size == 0:
            continue
        neg_err = z - margins[problem.var_sample[blk]]
        can_up = ((z > 0) & (a < lam)) | ((z < 0) & (a > 0))
        can_down = ((z > 0) & (a > 0)) | ((z < 0) & (a < lam))
        if not can_up.any() or not can_down.any():
            continue
        gap = float(neg_err[can_up].max() - neg_err[can_down].min())
        worst = max(worst, gap)
    return worst


def equality_residual(problem: DualProblem, alpha: np.ndarray) -> float:
    """Largest |sum_k z * alpha| over blocks (feasibility check)."""
    worst = 0.0
    for k in range(problem.n_thresholds):
        blk = problem.block(k)
        worst = max(
            worst, abs(float(np.dot(problem.var_sign[blk], alpha[blk])))
        )
    return worst


def solve_smo(
    problem: DualProblem,
    tol: float = 1e-3,
    max_passes: int | None = None,
) -> DualSolution:
    """Pairwise dual ascent; each update stays inside one threshold block.

    ``max_passes`` bounds the number of pair updates (default: ten times
    the variable count). The working pair is the most violating one in
    the visited block, which also maximizes the error spread among the
    feasible pairs there.
    """
    if max_passes is None:
        max_passes = max(10 * problem.n_variables, 1000)
    alpha = np.zeros(problem.n_variables)
    h = np.zeros(problem.n_samples)
    iterations, converged = smo_core(
        problem.gram,
        problem.var_sample,
        problem.var_sign,
        np.ascontiguousarray(problem.block_start, dtype=np.intp),
        float(problem.lam),
        float(tol),
        int(max_passes),
        alpha,
        h,
    )
    return DualSolution(
        alpha=alpha,
        objective=dual_objective(problem, alpha, h),
        iterations=int(iterations),
        converged=bool(converged),
        kkt_violation=kkt_violation(problem, alpha, h),
        margins=h,
    )


# ---------------------------------------------------------------------------
# Independent dense solver (cross-check oracle for small problems)
# ---------------------------------------------------------------------------

_DENSE_GUARD = 200


def _project_block(v: np.ndarray, z: np.ndarray, lam: float) -> np.ndarray:
    """Euclidean projection onto {0 <= a <= lam, sum z*a = 0}.

    Solves for the shift ``nu`` with clip(v - nu*z) summing to zero under
    z-weighting; the weighted sum is nonincreasing in ``nu`` so bisection
    converges.
    """
    if v.size == 0:
        return v.copy()

    def weighted_sum(nu: float) -> float:
        return float(np.dot(z, np.clip(v - nu * z, 0.0, lam)))

    radius = lam + float(np.abs(v).max()) + 1.0
    lo, hi = -radius, radius
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if weighted_sum(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    nu = 0.5 * (lo + hi)
    return np.clip(v - nu * z, 0.0, lam)


def _project(problem: DualProblem, v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    for k in range(problem.n_thresholds):
        blk = problem.block(k)
        out[blk] = _project_block(v[blk], problem.var_sign[blk], problem.lam)
    return out


def solve_projected_gradient(
    problem: DualProblem,
    tol: float = 1e-3,
    max_iter: int = 100_000,
) -> DualSolution:
    """Accelerated projected gradient on the dense dual; small problems only.

    Implemented independently of the pairwise solver (full matrix
    gradient, per-block projection onto the box/equality set) so the two
    can cross-validate each other. Guarded to ``<= 200`` variables.
    """
    n_vars = problem.n_variables
    if n_vars > _DENSE_GUARD:
        raise SolverError(
            f"dense solver guard exceeded: {n_vars} > {_DENSE_GUARD} variables"
        )
    sub = problem.gram[np.ix_(problem.var_sample, problem.var_sample)]
    Q = np.outer(problem.var_sign, problem.var_sign) * sub
    eigs = np.linalg.eigvalsh(Q)
    lipschitz = max(float(eigs[-1]), 1e-12)
    step = 1.0 / lipschitz

    alpha = np.zeros(n_vars)
    momentum = alpha.copy()
    t_prev = 1.0
    best_obj = 0.0
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        grad = Q @ momentum - 1.0
        nxt = _project(problem, momentum - step * grad)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_prev * t_prev))
        momentum = nxt + ((t_prev - 1.0) / t_next) * (nxt - alpha)
        obj = 0.5 * float(nxt @ Q @ nxt) - float(nxt.sum())
        if obj > best_obj:  # restart acceleration when the objective rises
            momentum = nxt.copy()
            t_next = 1.0
        best_obj = min(best_obj, obj)
        alpha = nxt
        t_prev = t_next
        if iterations % 25 == 0 or iterations == max_iter:
            if kkt_violation(problem, alpha) <= tol:
                converged = True
                break
    margins = _margins(problem, alpha)
    return DualSolution(
        alpha=alpha,
        objective=dual_objective(problem, alpha, margins),
        iterations=iterations,
        converged=converged,
        kkt_violation=kkt_violation(problem, alpha, margins),
        margins=margins,
    )


# ---------------------------------------------------------------------------
# Intercept recovery
# ---------------------------------------------------------------------------


def pava_non_decreasing(values) -> np.ndarray:
    """Pool-adjacent-violators projection onto non-decreasing sequences."""
    v = np.asarray(values, dtype=np.float64)
    starts: list[int] = []
    totals: list[float] = []
    counts: list[int] = []
    for i, x in enumerate(v):
        starts.append(i)
        totals.append(float(x))
        counts.append(1)
        while len(totals) > 1 and totals[-2] / counts[-2] > totals[-1] / counts[-1]:
            totals[-2] += totals[-1]
            counts[-2] += counts[-1]
            totals.pop()
            counts.pop()
            starts.pop()
    out = np.empty_like(v)
    for start, total, count in zip(starts, totals, counts):
        out[start : start + count] = total / count
    return out


def recover_intercepts(problem: DualProblem, solution: DualSolution) -> np.ndarray:
    """Intercept per threshold from the active-constraint structure.

    Free variables (strictly inside the box) pin the intercept exactly;
    with none, the midpoint of the feasible interval implied by the
    bound-active variables is used. Empty blocks are interpolated from
    their neighbors. Under ``MAE`` the raw intercepts must already be
    non-decreasing (asserted up to solver accuracy); under ``ZERO_ONE``
    they are projected to non-decreasing order.
    """
    lam = problem.lam
    h = solution.margins
    edge = 1e-8 * lam
    raw = np.full(problem.n_thresholds, np.nan)
    for k in range(problem.n_thresholds):
        blk = problem.block(k)
        a = solution.alpha[blk]
        if a.size == 0:
            continue
        z = problem.var_sign[blk]
        target = z - h[problem.var_sample[blk]]
        free = (a > edge) & (a < lam - edge)
        if free.any():
            raw[k] = float(target[free].mean())
            continue
        at_zero = a <= edge
        at_cap = a >= lam - edge
        lower_set = target[(at_zero & (z > 0)) | (at_cap & (z < 0))]
        upper_set = target[(at_zero & (z < 0)) | (at_cap & (z > 0))]
        lower = float(lower_set.max()) if lower_set.size else -np.inf
        upper = float(upper_set.min()) if upper_set.size else np.inf
        if np.isfinite(lower) and np.isfinite(upper):
            raw[k] = 0.5 * (lower + upper)
        elif np.isfinite(lower):
            raw[k] = lower
        elif np.isfinite(upper):
            raw[k] = upper
        else:
            raw[k] = 0.0
    raw = _fill_gaps(raw)
    if problem.loss_kind is LossKind.ZERO_ONE:
        return pava_non_decreasing(raw)
    slack = max(1e-6, 10.0 * solution.kkt_violation)
    if np.any(np.diff(raw) < -slack):
        raise SolverError(
            "distance-weighted fit produced decreasing intercepts beyond "
            f"solver accuracy: {raw}"
        )
    return raw


def _fill_gaps(values: np.ndarray) -> np.ndarray:
    """Linear interpolation over NaN entries, flat at the ends."""
    out = values.copy()
    known = np.flatnonzero(~np.isnan(out))
    if known.size == 0:
        return np.zeros_like(out)
    missing = np.flatnonzero(np.isnan(out))
    if missing.size:
        out[missing] = np.interp(missing, known, out[known])
    return out


# ---------------------------------------------------------------------------
# Fitted scorer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FittedScorer:
    """Support expansion plus per-threshold intercepts.

    ``support_rows`` holds the (transformed) feature rows with nonzero
    dual mass; ``sup_row`` indexes into them per retained dual variable.
    The shared score is ``h(x) = sum alpha * sign * k(row, x)`` and the
    threshold score is ``h(x) + intercepts[k]``.
    """

    support_rows: np.ndarray
    support_indices: np.ndarray  # original training row of each support row
    sup_row: np.ndarray
    sup_rank: np.ndarray
    sup_alpha: np.ndarray
    sup_sign: np.ndarray
    kernel: KernelSpec
    intercepts: np.ndarray
    k_classes: int

    def __post_init__(self) -> None:
        b = np.asarray(self.intercepts, dtype=np.float64)
        if np.any(np.diff(b) < 0.0):
            raise SolverError(f"intercepts must be non-decreasing, got {b}")

    def row_coefficients(self) -> np.ndarray:
        """Combined alpha*sign mass per support row."""
        coef = np.zeros(self.support_rows.shape[0])
        np.add.at(coef, self.sup_row, self.sup_alpha * self.sup_sign)
        return coef

    def shared_score(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.support_rows.shape[0] == 0:
            return np.zeros(X.shape[0])
        return gram(X, self.support_rows, self.kernel) @ self.row_coefficients()

    def decision_values(self, X) -> np.ndarray:
        """(m, K-1) matrix of threshold scores."""
        return self.shared_score(X)[:, None] + self.intercepts[None, :]

    def decision_value(self, x, k: int) -> float:
        """Score of the k-th threshold (0-based) at a single point."""
        return float(self.shared_score([x])[0] + self.intercepts[k])


def fit_scorer(
    problem: DualProblem,
    solution: DualSolution,
    features: np.ndarray,
    kernel: KernelSpec,
    intercepts: np.ndarray,
    k_classes: int,
) -> FittedScorer:
    keep = np.flatnonzero(solution.alpha > 0.0)
    samples = problem.var_sample[keep]
    unique_rows, sup_row = np.unique(samples, return_inverse=True)
    return FittedScorer(
        support_rows=np.asarray(features)[unique_rows],
        support_indices=unique_rows.astype(np.int64),
        sup_row=sup_row.astype(np.int64),
        sup_rank=problem.var_rank[keep].astype(np.int64),
        sup_alpha=solution.alpha[keep],
        sup_sign=problem.var_sign[keep],
        kernel=kernel,
        intercepts=np.asarray(intercepts, dtype=np.float64),
        k_classes=k_classes,
    )


def primal_hinge_objective(
    problem: DualProblem, solution: DualSolution, intercepts: np.ndarray
) -> float:
    """Hinge-surrogate objective at the fitted parameters.

    Margin-normalized form: the summed hinge slack over all weighted
    (threshold, sample) pairs plus ||h||^2 / (2 * lam). The weighted
    sign-disagreement training loss never exceeds this value.
    """
    h_var = solution.margins[problem.var_sample]
    b_var = intercepts[problem.var_rank]
    hinge = np.maximum(
        0.0, 1.0 - problem.var_sign * (h_var + b_var)
    ).sum()
    norm_sq = float(
        np.dot(solution.alpha * problem.var_sign, h_var)
    )
    return float(hinge) + norm_sq / (2.0 * problem.lam)
