"""Clustering of per-point estimates and per-class regression refits.

After the fusion solve, the per-point estimates concentrate around the
mixture components; k-means recovers the grouping and a separate
least-squares regression per group estimates each component from the
original measurements.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError, UnderdeterminedFitWarning
from .model import Dataset

__all__ = ["ClusteringResult", "RefitResult", "kmeans", "refit_regression", "match_labels"]

LLOYD_MAX_ITER = 300
MATCH_MAX_K = 8


@dataclass(frozen=True)
class ClusteringResult:
    centers: np.ndarray
    labels: np.ndarray
    inertia: float
    inertia_history: tuple[float, ...]

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)
        lab = np.asarray(self.labels, dtype=np.int64)
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "labels": self.labels.tolist(),
            "inertia": self.inertia,
        }


@dataclass(frozen=True)
class RefitResult:
    betas_hat: np.ndarray
    per_class_residual: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.betas_hat, dtype=float)
        b.setflags(write=False)
        object.__setattr__(self, "betas_hat", b)
        r = np.asarray(self.per_class_residual, dtype=float)
        r.setflags(write=False)
        object.__setattr__(self, "per_class_residual", r)

    def to_dict(self) -> dict:
        return {
            "betas_hat": self.betas_hat.tolist(),
            "per_class_residual": self.per_class_residual.tolist(),
        }


def _plusplus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    m = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(m)]
    sq = np.sum((points - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = sq.sum()
        if total > 0:
            probs = sq / total
            idx = rng.choice(m, p=probs)
        else:  # all points coincide with chosen centers
            idx = rng.integers(m)
        centers[c] = points[idx]
        sq = np.minimum(sq, np.sum((points - centers[c]) ** 2, axis=1))
    return centers


def _assign(points: np.ndarray, centers: np.ndarray):
    d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    labels = np.argmin(d2, axis=1)  # argmin ties break toward the lowest index
    return labels, d2


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator):
    centers = _plusplus_init(points, k, rng)
    labels, d2 = _assign(points, centers)
    history = [float(d2[np.arange(points.shape[0]), labels].sum())]
    for _ in range(LLOYD_MAX_ITER):
        new_centers = centers.copy()
        dist = d2[np.arange(points.shape[0]), labels].copy()
        for c in range(k):
            mask = labels == c
            if np.any(mask):
                new_centers[c] = points[mask].mean(axis=0)
            else:
                # repair: the point farthest from its center becomes this one
                far = int(np.argmax(dist))
                new_centers[c] = points[far]
                dist[far] = -1.0  # not reused by another empty cluster
        new_labels, d2 = _assign(points, new_centers)
        centers = new_centers
        history.append(float(d2[np.arange(points.shape[0]), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return centers, labels, history


def kmeans(points, k: int, restarts: int = 20, seed: int = 0) -> ClusteringResult:
    """Lloyd's algorithm with plus-plus seeding and restarts.

    Deterministic for a fixed seed: restart ``r`` draws from its own stream
    keyed by ``(seed, r)``, and the best run is chosen by lowest inertia with
    ties broken toward the lowest restart index.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise DataValidationError("points must be a nonempty m x d matrix")
    m = points.shape[0]
    if not 1 <= k <= m:
        raise DataValidationError(f"k must be in [1, {m}], got {k}")
    if restarts < 1:
        raise DataValidationError("restarts must be at least 1")
    best = None
    for r in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(r,)))
        centers, labels, history = _lloyd(points, k, rng)
        inertia = history[-1]
        if best is None or inertia < best[0]:
            best = (inertia, centers, labels, history)
    inertia, centers, labels, history = best
    return ClusteringResult(
        centers=centers, labels=labels, inertia=inertia,
        inertia_history=tuple(history),
    )


def refit_regression(dataset: Dataset, labels) -> RefitResult:
    """Least-squares fit of one coefficient vector per class.

    Rank-deficient classes get the minimum-norm solution and raise
    :class:`UnderdeterminedFitWarning`.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (dataset.m,):
        raise DataValidationError("labels must have one entry per row")
    k = int(labels.max()) + 1
    betas = np.zeros((k, dataset.d))
    residuals = np.zeros(k)
    for p in range(k):
        members = np.flatnonzero(labels == p)
        if members.size == 0:
            raise DataValidationError(f"class {p} has no members")
        A = dataset.features[members]
        b = dataset.responses[members]
        beta, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
        if rank < dataset.d:
            warnings.warn(
                f"class {p} is underdetermined (rank {rank} < {dataset.d}); "
                "returning the minimum-norm coefficients",
                UnderdeterminedFitWarning,
            )
        betas[p] = beta
        residuals[p] = float(np.max(np.abs(A @ beta - b)))
    return RefitResult(betas_hat=betas, per_class_residual=residuals)


def match_labels(predicted, truth, k: int) -> tuple[tuple[int, ...], float]:
    """Best relabeling of ``predicted`` against ``truth`` over all
    permutations of ``{0..k-1}``; exhaustive, so k is capped at 8.

    Returns ``(perm, accuracy)`` where ``perm[p]`` is the truth class that
    predicted class ``p`` is mapped to.
    """
    if k > MATCH_MAX_K:
        raise DataValidationError(f"exhaustive matching refuses k > {MATCH_MAX_K}")
    predicted = np.asarray(predicted, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if predicted.shape != truth.shape:
        raise DataValidationError("label lists must have the same length")
    best_perm = None
    best_hits = -1
    for perm in itertools.permutations(range(k)):
        hits = int(np.sum(np.asarray(perm)[predicted] == truth))
        if hits > best_hits:
            best_hits = hits
            best_perm = perm
    return best_perm, best_hits / predicted.size
