"""Closed-form dual certificate for exact recovery of a labeled instance.

For each class ``p`` with weighted direction ``v_p`` and size ``n_p``, the
multipliers are

    nu_i   = sign(v_p.a_i) * ||v_p|| * (m - n_p) / ||P_v a_i||
    xi_ij  = (nu_i * P_perp a_i - nu_j * P_perp a_j) / n_p

where ``P_v`` / ``P_perp`` project onto ``span{v_p}`` and its complement.
The certificate proves the candidate solution (each point assigned its own
class's coefficients) is the unique minimizer of the pairwise-fusion program
when three conditions hold:

* stationarity: ``nu_i a_i = sum_{j in class, j != i} xi_ij + (m - n_p) v_p``
  for every point;
* strict bound: ``gamma = max ||xi_ij|| < 1``;
* antisymmetry: ``xi_ij = -xi_ji`` (structural here: one vector is stored per
  unordered pair and negated on access).

Stationarity holds exactly when the instance is balanced; the verdict reports
the worst-case stationarity defect so imbalanced data fails cleanly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CertificateUndefinedError, DataValidationError
from .geometry import ORTHO_RTOL, RANK_RTOL, _resolve_directions
from .model import Dataset, MixtureModel

__all__ = ["Certificate", "CertificateVerdict", "build_certificate", "verify_certificate"]

DEFAULT_S1_TOL = 1e-8
GAMMA_BORDERLINE = 1e-9


@dataclass(frozen=True)
class Certificate:
    """Multipliers (nu, xi) for one labeled instance.

    ``xi`` stores one vector per within-class unordered pair ``(i, j)`` with
    ``i < j``; :meth:`xi_at` negates on swapped access so antisymmetry holds
    exactly by construction.
    """

    nu: np.ndarray
    xi: dict[tuple[int, int], np.ndarray]
    gamma: float
    labels: np.ndarray
    dim: int

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        nu.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        labels = np.asarray(self.labels, dtype=np.int64)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def xi_at(self, i: int, j: int) -> np.ndarray:
        if self.labels[i] != self.labels[j]:
            raise DataValidationError(
                f"xi is defined only within a class; rows {i} and {j} differ"
            )
        if i == j:
            return np.zeros(self.dim)
        if i < j:
            return self.xi[(i, j)]
        return -self.xi[(j, i)]


@dataclass(frozen=True)
class CertificateVerdict:
    """Result of checking the certificate conditions.

    ``certifies`` is true exactly when the stationarity defect is within
    ``tol * s1_scale``, ``gamma`` is strictly below one, and every class
    spans the full space.
    """

    s1_residual: float
    s1_scale: float
    tol: float
    gamma: float
    strict_gamma: bool
    borderline_gamma: bool
    spans_ok: bool
    certifies: bool

    def to_dict(self) -> dict:
        return {
            "s1_residual": self.s1_residual,
            "s1_scale": self.s1_scale,
            "tol": self.tol,
            "gamma": self.gamma,
            "strict_gamma": self.strict_gamma,
            "borderline_gamma": self.borderline_gamma,
            "spans_ok": self.spans_ok,
            "certifies": self.certifies,
        }


def build_certificate(dataset: Dataset, model: MixtureModel) -> Certificate:
    """Construct the closed-form multipliers for a labeled instance.

    Raises :class:`CertificateUndefinedError` if any measurement is exactly
    orthogonal to its class direction (the formulas divide by that
    projection's norm).
    """
    weighted = _resolve_directions(dataset, model)
    m = dataset.m
    nu = np.zeros(m)
    ortho = np.zeros_like(dataset.features)
    for p in range(model.k):
        members = dataset.class_members(p)
        v = weighted[p]
        vnorm = np.linalg.norm(v)
        vhat = v / vnorm
        A = dataset.features[members]
        coef = A @ vhat
        par_norm = np.abs(coef)
        bad = np.flatnonzero(par_norm <= ORTHO_RTOL * np.linalg.norm(A, axis=1))
        if bad.size:
            row = int(members[bad[0]])
            raise CertificateUndefinedError(
                f"certificate undefined: measurement row {row} is orthogonal "
                f"to its class direction",
                row_index=row,
            )
        signs = np.where(coef >= 0.0, 1.0, -1.0)
        n_rest = m - members.size
        nu[members] = signs * vnorm * n_rest / par_norm
        ortho[members] = A - np.outer(coef, vhat)

    xi: dict[tuple[int, int], np.ndarray] = {}
    gamma = 0.0
    scaled = nu[:, None] * ortho
    for p in range(model.k):
        members = dataset.class_members(p)
        n_p = members.size
        for a_pos in range(n_p):
            i = int(members[a_pos])
            for b_pos in range(a_pos + 1, n_p):
                j = int(members[b_pos])
                vec = (scaled[i] - scaled[j]) / n_p
                vec.setflags(write=False)
                xi[(i, j)] = vec
                gamma = max(gamma, float(np.linalg.norm(vec)))
    return Certificate(
        nu=nu, xi=xi, gamma=gamma, labels=dataset.labels, dim=dataset.d
    )


def verify_certificate(
    cert: Certificate,
    dataset: Dataset,
    model: MixtureModel,
    tol: float = DEFAULT_S1_TOL,
) -> CertificateVerdict:
    """Check stationarity, the strict gamma bound, and the span condition.

    ``tol`` is relative: the stationarity defect is compared against
    ``tol * max_i ||nu_i a_i||``.  The gamma test is strict (no slack); values
    within 1e-9 below one are flagged as borderline.
    """
    weighted = _resolve_directions(dataset, model)
    if not np.array_equal(cert.labels, dataset.labels):
        raise DataValidationError("certificate was built for different labels")
    if cert.nu.shape != (dataset.m,):
        raise DataValidationError("certificate size does not match dataset")

    s1_residual = 0.0
    spans_ok = True
    for p in range(model.k):
        members = dataset.class_members(p)
        rest = dataset.m - members.size
        target = rest * weighted[p]
        for i in members:
            total = np.zeros(dataset.d)
            for j in members:
                if j != i:
                    total += cert.xi_at(int(i), int(j))
            defect = cert.nu[i] * dataset.features[i] - total - target
            s1_residual = max(s1_residual, float(np.linalg.norm(defect)))
        svals = np.linalg.svd(dataset.features[members], compute_uv=False)
        if int(np.sum(svals > RANK_RTOL * svals[0])) != dataset.d:
            spans_ok = False

    scale = float(np.max(np.abs(cert.nu) * np.linalg.norm(dataset.features, axis=1)))
    strict = cert.gamma < 1.0
    borderline = strict and cert.gamma >= 1.0 - GAMMA_BORDERLINE
    certifies = (s1_residual <= tol * scale) and strict and spans_ok
    return CertificateVerdict(
        s1_residual=s1_residual,
        s1_scale=scale,
        tol=tol,
        gamma=cert.gamma,
        strict_gamma=strict,
        borderline_gamma=borderline,
        spans_ok=spans_ok,
        certifies=certifies,
    )
