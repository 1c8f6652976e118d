"""End-to-end fitting: optional preprocessing, fusion solve, clustering of
the per-point estimates, and per-class regression refits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import ClusteringResult, RefitResult, kmeans, refit_regression
from .dataio import preprocess_center_scale
from .model import Dataset, EstimateField
from .solver import SolveTrace, SolverOptions, irls_solve

__all__ = ["FitReport", "fit_pipeline"]


@dataclass
class FitReport:
    k: int
    betas_hat: np.ndarray
    labels: np.ndarray
    per_class_residual: np.ndarray
    inertia: float
    trace: SolveTrace

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "betas_hat": self.betas_hat.tolist(),
            "labels": [int(v) + 1 for v in self.labels],  # 1-based for I/O
            "per_class_residual": self.per_class_residual.tolist(),
            "inertia": self.inertia,
            "trace": self.trace.to_dict(),
        }


def fit_pipeline(
    dataset: Dataset,
    k: int,
    opts: SolverOptions = SolverOptions(),
    restarts: int = 20,
    seed: int = 0,
    center_column: int | None = None,
    center_alpha: float = 1.0,
) -> tuple[FitReport, EstimateField]:
    """Solve, cluster into ``k`` groups, and refit one model per group.

    ``center_column`` (0-based), when given, recenters and rescales that
    feature column before solving.
    """
    if center_column is not None:
        dataset = preprocess_center_scale(dataset, center_alpha, center_column)
    estimates, trace = irls_solve(dataset, opts)
    clustering: ClusteringResult = kmeans(estimates.z, k, restarts=restarts, seed=seed)
    refit: RefitResult = refit_regression(dataset, clustering.labels)
    report = FitReport(
        k=k,
        betas_hat=refit.betas_hat,
        labels=clustering.labels,
        per_class_residual=refit.per_class_residual,
        inertia=clustering.inertia,
        trace=trace,
    )
    return report, estimates
