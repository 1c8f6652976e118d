"""Iteratively reweighted least squares for the pairwise-fusion program.

The target problem is

    minimize   sum_{i,j} ||z_i - z_j||_2   subject to  a_i^T z_i = b_i,

solved by alternating two steps from uniform initial weights:

1. an equality-constrained weighted least-squares subproblem
   ``argmin sum_{i,j} w_ij ||z_i - z_j||^2  s.t.  a_i^T z_i = b_i``;
2. the weight update ``w_ij = (||z_i - z_j||^2 + delta)^(-1/2)``.

Each subproblem is solved exactly.  The primary route assembles the saddle
point (KKT) system ``[[2 L (x) I_d, A^T], [A, 0]]`` with ``L`` the weighted
graph Laplacian and factorizes it with a dense symmetric-indefinite solver.
For larger instances an algebraically equivalent reduction is used: writing
the stationarity condition as ``2 L Z = diag(lam) A_rows`` and eliminating
``Z`` through the Laplacian pseudoinverse leaves an (m + d) system in the
multipliers plus the free mean translation.  Both routes finish with one
step of iterative refinement and an exact re-projection of every row onto
its constraint hyperplane.

Degenerate subproblems (disconnected weight graph, or measurement vectors
that do not span the full space) have multiple minimizers; the minimum-norm
one is returned along with a :class:`NonUniqueSolutionWarning`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import (
    DataValidationError,
    NonUniqueSolutionWarning,
    NumericalError,
)
from .geometry import orthonormal_complement_basis
from .model import Dataset, EstimateField, recovery_error

__all__ = [
    "SolverOptions",
    "SolveTrace",
    "WeightMatrix",
    "update_weights",
    "weighted_ls_step",
    "irls_solve",
    "smoothed_objective",
]

# Condition-estimate floor: reciprocal condition numbers below this raise.
RCOND_MIN = 1e-14
# KKT dimension (m*d + m) above which the reduced route is preferred.
DENSE_SIZE_LIMIT = 600


@dataclass(frozen=True)
class SolverOptions:
    """Solver parameters.

    ``delta`` is the smoothing constant in the weight update and stays fixed
    by default.  Setting ``delta_init`` enables a geometric annealing
    schedule ``delta_t = max(delta, delta_init * delta_decay**(t-1))``.
    """

    delta: float = 1e-16
    max_iter: int = 150
    stop_tol: float = 1e-5
    subproblem_tol: float = 1e-10
    delta_init: float | None = None
    delta_decay: float = 0.5

    def __post_init__(self):
        if not self.delta > 0:
            raise DataValidationError("delta must be positive")
        if self.max_iter < 1:
            raise DataValidationError("max_iter must be at least 1")
        if not (self.stop_tol > 0 and self.subproblem_tol > 0):
            raise DataValidationError("tolerances must be positive")
        if self.delta_init is not None and not self.delta_init > 0:
            raise DataValidationError("delta_init must be positive")
        if not 0 < self.delta_decay <= 1:
            raise DataValidationError("delta_decay must be in (0, 1]")

    def delta_at(self, iteration: int) -> float:
        """Smoothing value for a 1-based iteration index."""
        if self.delta_init is None:
            return self.delta
        return max(self.delta, self.delta_init * self.delta_decay ** (iteration - 1))


@dataclass
class SolveTrace:
    """Per-solve diagnostics."""

    iterations: int
    objective_history: list[float]
    final_step_norm: float | None
    converged: bool
    max_feasibility_residual: float

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "objective_history": self.objective_history,
            "final_step_norm": self.final_step_norm,
            "converged": self.converged,
            "max_feasibility_residual": self.max_feasibility_residual,
        }


@dataclass(frozen=True)
class WeightMatrix:
    """Symmetric nonnegative pair weights with a zero diagonal."""

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DataValidationError("weights must be a square matrix")
        if not np.all(np.isfinite(w)):
            raise DataValidationError("weights contain non-finite values")
        if np.any(w < 0):
            raise DataValidationError("weights must be nonnegative")
        if not np.array_equal(w, w.T):
            raise DataValidationError("weights must be symmetric")
        if np.any(np.diag(w) != 0.0):
            raise DataValidationError("weight diagonal must be zero")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def m(self) -> int:
        return self.w.shape[0]

    @classmethod
    def uniform(cls, m: int) -> "WeightMatrix":
        w = np.ones((m, m)) - np.eye(m)
        return cls(w)


def _pairwise_sq_dists(z: np.ndarray) -> np.ndarray:
    diffs = z[:, None, :] - z[None, :, :]
    return np.einsum("ijk,ijk->ij", diffs, diffs)


def update_weights(Z, delta: float) -> WeightMatrix:
    """``w_ij = (||z_i - z_j||^2 + delta)^(-1/2)`` with a zero diagonal."""
    if not delta > 0:
        raise DataValidationError("delta must be positive")
    z = Z.z if isinstance(Z, EstimateField) else np.asarray(Z, dtype=float)
    w = 1.0 / np.sqrt(_pairwise_sq_dists(z) + delta)
    np.fill_diagonal(w, 0.0)
    return WeightMatrix(w)


def smoothed_objective(Z, delta: float) -> float:
    """``sum_{i != j} sqrt(||z_i - z_j||^2 + delta)`` (self-pairs excluded)."""
    z = Z.z if isinstance(Z, EstimateField) else np.asarray(Z, dtype=float)
    sq = _pairwise_sq_dists(z)
    vals = np.sqrt(sq + delta)
    np.fill_diagonal(vals, 0.0)
    return float(vals.sum())


def _connected(w: np.ndarray) -> bool:
    m = w.shape[0]
    seen = np.zeros(m, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(w[i] > 0.0):
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return bool(seen.all())


def _features_span_full(features: np.ndarray) -> bool:
    svals = np.linalg.svd(features, compute_uv=False)
    return svals.size == features.shape[1] and bool(
        np.sum(svals > 1e-12 * svals[0]) == features.shape[1]
    )


def _sym_solve(M: np.ndarray, rhs: np.ndarray):
    """Solve a symmetric indefinite system; returns (solution, factors).

    Uses the Bunch-Kaufman factorization and raises if the reciprocal
    condition estimate falls below ``RCOND_MIN``.
    """
    anorm = np.linalg.norm(M, 1)
    ldu, ipiv, info = lapack.dsytrf(M, lower=1)
    if info != 0:
        raise NumericalError(f"symmetric factorization failed (info={info})")
    rcond, _ = lapack.dsycon(ldu, ipiv, anorm, lower=1)
    if not np.isfinite(rcond) or rcond < RCOND_MIN:
        raise NumericalError(
            f"KKT system too ill-conditioned (rcond estimate {rcond:.2e})"
        )
    x, info = lapack.dsytrs(ldu, ipiv, rhs[:, None], lower=1)
    if info != 0:
        raise NumericalError(f"symmetric solve failed (info={info})")

    def resolve(r: np.ndarray) -> np.ndarray:
        y, bad = lapack.dsytrs(ldu, ipiv, r[:, None], lower=1)
        if bad != 0:
            raise NumericalError(f"symmetric solve failed (info={bad})")
        return y[:, 0]

    return x[:, 0], resolve


def _laplacian(w: np.ndarray) -> np.ndarray:
    L = -w.copy()
    L[np.diag_indices_from(L)] = w.sum(axis=1)
    return L


def _project_rows(z: np.ndarray, features: np.ndarray, responses: np.ndarray):
    """Exactly restore per-row feasibility a_i^T z_i = b_i."""
    sq = np.einsum("ij,ij->i", features, features)
    gap = np.einsum("ij,ij->i", features, z) - responses
    return z - (gap / sq)[:, None] * features


def _solve_dense_kkt(features, responses, L):
    # The quadratic block is rescaled to unit magnitude so that the condition
    # estimate reflects the geometry rather than the weight scale (weights
    # reach delta**-0.5 once points coincide).  Rescaling the objective does
    # not move the minimizer; only the multipliers change by the same factor.
    m, d = features.shape
    scale = max(1.0, float(np.abs(L).max()))
    n = m * d + m
    M = np.zeros((n, n))
    M[: m * d, : m * d] = np.kron((2.0 / scale) * L, np.eye(d))
    for i in range(m):
        M[m * d + i, i * d : (i + 1) * d] = features[i]
        M[i * d : (i + 1) * d, m * d + i] = features[i]
    rhs = np.concatenate([np.zeros(m * d), responses])
    x, resolve = _sym_solve(M, rhs)
    x = x + resolve(rhs - M @ x)  # one refinement step
    z = x[: m * d].reshape(m, d)
    nu = x[m * d :] * scale
    return z, nu


def _solve_reduced_kkt(features, responses, L):
    """Equivalent solve in (m + d) unknowns via the Laplacian pseudoinverse.

    With ``lam`` the stationarity multipliers (2 L Z = diag(lam) A_rows) and
    ``c`` the free translation along the Laplacian nullspace,

        [[(1/2) (L^+ o G), A_rows], [A_rows^T, 0]] [lam, c] = [b, 0]

    where ``G`` is the Gram matrix of the measurement vectors and ``o`` the
    elementwise product.  Refinement is run against the full KKT residual.
    """
    m, d = features.shape
    evals, evecs = np.linalg.eigh(L)
    cutoff = max(evals.max(), 0.0) * 1e-12
    keep = evals > cutoff
    if int((~keep).sum()) != 1:
        # unexpected numerical nullspace; defer to the dense route
        return _solve_dense_kkt(features, responses, L)
    Lp = (evecs[:, keep] / evals[keep]) @ evecs[:, keep].T

    gram = features @ features.T
    S = np.zeros((m + d, m + d))
    S[:m, :m] = 0.5 * (Lp * gram)
    S[:m, m:] = features
    S[m:, :m] = features.T
    rhs = np.concatenate([responses, np.zeros(d)])
    sol, resolve = _sym_solve(S, rhs)
    lam, c = sol[:m], sol[m:]
    z = 0.5 * (Lp @ (lam[:, None] * features)) + c[None, :]

    for _ in range(2):
        stat_res = lam[:, None] * features - 2.0 * (L @ z)
        feas_res = responses - np.einsum("ij,ij->i", features, z)
        orth_res = -features.T @ lam
        top = feas_res - 0.5 * np.einsum("ij,ij->i", Lp @ stat_res, features)
        corr = resolve(np.concatenate([top, orth_res]))
        dlam, dc = corr[:m], corr[m:]
        z = z + 0.5 * (Lp @ ((dlam[:, None] * features) + stat_res)) + dc[None, :]
        lam = lam + dlam
        c = c + dc
    return z, -lam


def _solve_min_norm(features, responses, L, tol):
    """Null-space solve returning the minimum-norm minimizer.

    Per-row translations are restricted to each constraint hyperplane, which
    makes the problem unconstrained; the least-squares solve then picks the
    minimum-norm stationary point.
    """
    m, d = features.shape
    sq = np.einsum("ij,ij->i", features, features)
    z0 = (responses / sq)[:, None] * features
    if d == 1:
        return z0
    bases = [orthonormal_complement_basis(features[i]) for i in range(m)]
    nd = d - 1
    H = np.zeros((m * nd, m * nd))
    for i in range(m):
        for j in range(m):
            if L[i, j] != 0.0:
                H[i * nd : (i + 1) * nd, j * nd : (j + 1) * nd] = (
                    4.0 * L[i, j] * (bases[i].T @ bases[j])
                )
    g = np.concatenate([4.0 * (bases[i].T @ (L[i] @ z0)) for i in range(m)])
    y, *_ = np.linalg.lstsq(H, -g, rcond=None)
    scale = max(1.0, np.abs(H).sum(axis=1).max() * np.abs(y).max(initial=0.0))
    if float(np.max(np.abs(H @ y + g), initial=0.0)) > tol * scale:
        raise NumericalError("null-space normal equations are inconsistent")
    z = z0 + np.stack([bases[i] @ y[i * nd : (i + 1) * nd] for i in range(m)])
    return z


def weighted_ls_step(
    dataset: Dataset,
    weights: WeightMatrix,
    *,
    subproblem_tol: float = 1e-10,
    method: str = "auto",
) -> EstimateField:
    """Exact minimizer of the weighted quadratic under the row constraints.

    ``method`` selects the KKT route: "auto" picks dense or reduced by
    problem size; "dense" and "reduced" force one.  Non-unique subproblems
    (disconnected weight graph or rank-deficient measurement span) return
    the minimum-norm minimizer and emit :class:`NonUniqueSolutionWarning`.
    """
    if weights.m != dataset.m:
        raise DataValidationError("weight matrix size does not match dataset")
    if method not in ("auto", "dense", "reduced"):
        raise DataValidationError(f"unknown method {method!r}")
    features = dataset.features
    responses = dataset.responses
    L = _laplacian(weights.w)

    if not _connected(weights.w):
        warnings.warn(
            "weight graph is disconnected; returning the minimum-norm minimizer",
            NonUniqueSolutionWarning,
        )
        z = _solve_min_norm(features, responses, L, subproblem_tol)
        nu = None
    elif not _features_span_full(features):
        warnings.warn(
            "measurement vectors do not span the full space; subproblem is "
            "non-unique, returning the minimum-norm minimizer",
            NonUniqueSolutionWarning,
        )
        z = _solve_min_norm(features, responses, L, subproblem_tol)
        nu = None
    else:
        kkt_dim = dataset.m * dataset.d + dataset.m
        use_dense = method == "dense" or (method == "auto" and kkt_dim <= DENSE_SIZE_LIMIT)
        if use_dense:
            z, nu = _solve_dense_kkt(features, responses, L)
        else:
            z, nu = _solve_reduced_kkt(features, responses, L)

    z = _project_rows(z, features, responses)

    if nu is not None:
        # Backward-style check: the residual is compared per row against the
        # magnitude of the terms that produced it, which is the sharpest
        # scale at which it can be evaluated in floating point.
        stat = 2.0 * (L @ z) + nu[:, None] * features
        row_scale = np.maximum(
            2.0 * (np.abs(L) @ np.linalg.norm(z, axis=1))
            + np.abs(nu) * np.linalg.norm(features, axis=1),
            1.0,
        )
        rel = float(np.max(np.linalg.norm(stat, axis=1) / row_scale))
        if rel > subproblem_tol:
            raise NumericalError("KKT stationarity residual above tolerance")
    gaps = np.abs(np.einsum("ij,ij->i", features, z) - responses)
    bounds = 1e-12 * (
        np.abs(responses)
        + np.linalg.norm(features, axis=1) * np.linalg.norm(z, axis=1)
    ) + 1e-12
    if np.any(gaps > bounds):
        raise NumericalError("constraint residual above tolerance after solve")
    return EstimateField(z)


def irls_solve(
    dataset: Dataset, opts: SolverOptions = SolverOptions()
) -> tuple[EstimateField, SolveTrace]:
    """Run the reweighting loop until the normalized step norm drops below
    ``opts.stop_tol`` or ``opts.max_iter`` subproblems have been solved.

    Non-convergence is reported through ``trace.converged``, not raised.
    """
    weights = WeightMatrix.uniform(dataset.m)
    history: list[float] = []
    prev: EstimateField | None = None
    step: float | None = None
    converged = False
    max_feas = 0.0
    iterations = 0
    for t in range(1, opts.max_iter + 1):
        iterations = t
        delta_t = opts.delta_at(t)
        Z = weighted_ls_step(dataset, weights, subproblem_tol=opts.subproblem_tol)
        history.append(smoothed_objective(Z, delta_t))
        max_feas = max(max_feas, float(np.max(np.abs(
            np.einsum("ij,ij->i", dataset.features, Z.z) - dataset.responses
        ))))
        if prev is not None:
            step = recovery_error(Z, prev)
            if step < opts.stop_tol:
                converged = True
                prev = Z
                break
        prev = Z
        weights = update_weights(Z, delta_t)
    trace = SolveTrace(
        iterations=iterations,
        objective_history=history,
        final_step_norm=step,
        converged=converged,
        max_feasibility_residual=max_feas,
    )
    return prev, trace
