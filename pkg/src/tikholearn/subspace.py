"""Empirical covariance, spectral-gap rank detection and projection estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .errors import (
    EmptyDataError,
    InvalidSpectrumError,
    NoSpectralGapError,
    RankError,
    ShapeError,
)
from .model import ForwardModel, pseudo_inverse_apply
from .sampling import Dataset, SamplingSpec

P_INDEX_THRESHOLD = 1e-8


@dataclass(frozen=True, eq=False)
class SubspaceEstimate:
    """Top eigenvectors of a sample covariance and the cut that selected them.

    Attributes
    ----------
    eigenvalues : (m,) ndarray
        Nonincreasing, clipped at zero.
    basis : (m, h_detected) ndarray
        Orthonormal basis of the range of the empirical projection.
    gap_ratio : float
        Regularised ratio of the eigenvalues on either side of the cut;
        infinite when the cut keeps every eigenvector.
    p_index : int or None
        Largest ``i`` with ``||Pi u_i|| > 1e-8`` for the true projection ``Pi``;
        only available when ground truth is attached.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    h_detected: int
    gap_ratio: float
    n: Optional[int] = None
    lambda_min_hat: float = 0.0
    p_index: Optional[int] = None

    def project(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.basis.shape[0]:
            raise ShapeError(f"expected length {self.basis.shape[0]}, got {y.shape}")
        return (y @ self.basis) @ self.basis.T

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T


@dataclass(frozen=True)
class BoundInputs:
    n: int
    m: int
    h: int
    tau: float
    sigma: float
    lambda_min: float


@dataclass(frozen=True)
class PerturbationCheck:
    lhs: float
    rhs: float
    holds: Optional[bool]  # None when the gap hypothesis fails


def empirical_covariance(dataset: Union[Dataset, np.ndarray]) -> np.ndarray:
    """Noncentred sample covariance ``(1/n) sum_i y_i y_i^T``."""
    ys = dataset.ys if isinstance(dataset, Dataset) else np.asarray(dataset, dtype=float)
    if ys.ndim == 1:
        ys = ys[None, :]
    if ys.shape[0] == 0:
        raise EmptyDataError("empty dataset")
    cov = ys.T @ ys / ys.shape[0]
    return (cov + cov.T) / 2.0


def detect_rank_and_project(cov, h_override: Optional[int] = None,
                            gap_policy: Union[str, float] = "max_ratio",
                            n: Optional[int] = None) -> SubspaceEstimate:
    """Eigendecompose ``cov`` and keep the eigenvectors above a spectral gap.

    ``gap_policy`` is ``"max_ratio"`` (largest ratio of consecutive
    eigenvalues, each shifted by ``1e-15 * trace``) or a float threshold, in
    which case every eigenvalue strictly above it is kept. ``h_override``
    bypasses both.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ShapeError(f"covariance must be square, got {cov.shape}")
    m = cov.shape[0]
    w, vecs = np.linalg.eigh((cov + cov.T) / 2.0)
    order = np.argsort(w)[::-1]
    w = np.clip(w[order], 0.0, None)
    vecs = vecs[:, order]
    eps = 1e-15 * float(np.sum(w))

    if h_override is not None:
        h = int(h_override)
        if not 1 <= h <= m:
            raise RankError(f"rank out of range: h_override={h} with m={m}")
    elif m == 1:
        h = 1
    elif gap_policy == "max_ratio":
        if w[0] - w[-1] <= eps:
            raise NoSpectralGapError("no spectral gap: all eigenvalues are equal; pass h_override")
        ratios = (w[:-1] + eps) / (w[1:] + eps)
        h = int(np.argmax(ratios)) + 1
    else:
        threshold = float(gap_policy)
        h = int(np.sum(w > threshold))
        if h == 0:
            raise NoSpectralGapError(f"no spectral gap: no eigenvalue above {threshold}")

    gap = math.inf if h == m else float((w[h - 1] + eps) / (w[h] + eps))
    # eigenvector signs: largest entry positive, for reproducible dumps
    basis = vecs[:, :h].copy()
    flip = np.sign(basis[np.argmax(np.abs(basis), axis=0), np.arange(h)])
    flip[flip == 0] = 1.0
    basis *= flip
    return SubspaceEstimate(eigenvalues=w, basis=basis, h_detected=h, gap_ratio=gap,
                            n=n, lambda_min_hat=float(w[h - 1]))


def fit_subspace(dataset: Dataset, h_override: Optional[int] = None,
                 gap_policy: Union[str, float] = "max_ratio") -> SubspaceEstimate:
    return detect_rank_and_project(empirical_covariance(dataset), h_override, gap_policy,
                                   n=dataset.n)


def estimate_signal_and_noise(model: ForwardModel, est: SubspaceEstimate, y):
    """``x_hat = A^+ Pi_hat y`` and ``eta_hat = y - Pi_hat y``."""
    y = np.asarray(y, dtype=float)
    if y.shape != (model.m,):
        raise ShapeError(f"expected data of length {model.m}, got {y.shape}")
    py = est.project(y)
    return pseudo_inverse_apply(model, py), y - py


def _projection_gap(p_basis, q_basis):
    diff = p_basis @ p_basis.T - q_basis @ q_basis.T
    return float(np.max(np.abs(np.linalg.eigvalsh(diff)))) if diff.size else 0.0


def projection_distance(p_basis, q_basis) -> float:
    """Spectral norm of ``P P^T - Q Q^T`` for orthonormal bases of equal rank."""
    p_basis = np.atleast_2d(np.asarray(p_basis, dtype=float))
    q_basis = np.atleast_2d(np.asarray(q_basis, dtype=float))
    if p_basis.shape != q_basis.shape:
        raise RankError(f"incomparable projections: shapes {p_basis.shape} and {q_basis.shape}")
    return _projection_gap(p_basis, q_basis)


def projection_distance_any(p_basis, q_basis) -> float:
    """Like :func:`projection_distance` but accepts different ranks (then 1)."""
    p_basis = np.atleast_2d(np.asarray(p_basis, dtype=float))
    q_basis = np.atleast_2d(np.asarray(q_basis, dtype=float))
    if p_basis.shape[0] != q_basis.shape[0]:
        raise ShapeError("bases live in different spaces")
    return _projection_gap(p_basis, q_basis)


def theoretical_bound_B(inputs: BoundInputs) -> float:
    """Shape of the high-probability bound on ``||(Pi - Pi_hat) y - Pi eta||``.

    All absolute constants are set to one, so the value is a diagnostic of how
    the error scales with ``n``, ``m``, ``h``, ``sigma`` and ``tau``, not a bound.
    """
    n, m, h = inputs.n, inputs.m, inputs.h
    tau, sigma, lam = inputs.tau, inputs.sigma, inputs.lambda_min
    if not lam > 0:
        raise InvalidSpectrumError(f"invalid spectrum: lambda_min={lam} must be positive")
    if n <= 0 or m <= 0 or h <= 0 or sigma < 0 or tau < 0:
        raise ValueError("n, m, h must be positive and tau, sigma nonnegative")
    rn = math.sqrt(n)
    rmn = math.sqrt(m / n)
    value = (
        math.sqrt(h * m / n) / lam
        + sigma * (math.sqrt(h) + m / (lam * rn))
        + sigma ** 2 * math.sqrt(h) / lam
        + sigma ** 3 * math.sqrt(m) / lam
        + tau * (rmn / lam + sigma * (1.0 + rmn / lam) + sigma ** 2 / lam)
        + tau ** 2 / (lam * rn)
    )
    return value


def _range_basis(mat, rtol=1e-10):
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return u[:, :0]
    return u[:, s > rtol * s[0]]


def population_covariance(model: ForwardModel, spec: SamplingSpec):
    """Exact ``Sigma_Y = A Sigma_X A^T + sigma^2 I`` and a basis of ``A V``.

    Gaussian and Rademacher coefficient signals have ``Sigma_X = B B^T`` for
    the subspace basis ``B``; a deterministic signal list has the average of
    its outer products. Both noise models have identity covariance.
    """
    if spec.d != model.n_features:
        raise ShapeError("sampling spec does not match the operator")
    if spec.signal_dist == "deterministic":
        vecs = spec.signal_vectors
        if len(vecs) < spec.h:
            raise RankError("rank-deficient signal model: fewer vectors than h")
        ax = vecs @ model.a.T
        sigma_ax = ax.T @ ax / len(vecs)
    else:
        ab = model.a @ spec.subspace_basis
        sigma_ax = ab @ ab.T
    sigma_y = sigma_ax + spec.sigma ** 2 * np.eye(model.m)
    pi_basis = _range_basis(sigma_ax)
    return sigma_y, pi_basis


def smallest_nonzero_eigenvalue(mat, rtol: float = 1e-10) -> float:
    w = np.linalg.eigvalsh(np.asarray(mat, dtype=float))
    top = w[-1]
    if top <= 0:
        raise InvalidSpectrumError("invalid spectrum: matrix has no positive eigenvalue")
    return float(np.min(w[w > rtol * top]))


def signal_index_p(model: ForwardModel, pi_basis, threshold: float = P_INDEX_THRESHOLD) -> int:
    """Largest 1-based ``i`` with ``||Pi u_i|| > threshold`` (0 if none)."""
    norms = np.linalg.norm(np.asarray(pi_basis).T @ model.svd_u, axis=0)
    hits = np.nonzero(norms > threshold)[0]
    return int(hits[-1]) + 1 if hits.size else 0


def attach_ground_truth(est: SubspaceEstimate, model: ForwardModel, pi_basis) -> SubspaceEstimate:
    return replace(est, p_index=signal_index_p(model, pi_basis))


def _distinct_levels(w, tol):
    """Group nonincreasing eigenvalues into clusters; return cluster values and sizes."""
    levels, counts = [], []
    for value in w:
        if levels and abs(levels[-1] - value) <= tol:
            counts[-1] += 1
        else:
            levels.append(value)
            counts.append(1)
    return np.array(levels), np.array(counts)


def perturbation_bound_check(mat_a, mat_b, j: int) -> PerturbationCheck:
    """Compare both sides of the eigenprojection perturbation inequality.

    ``j`` (1-based) indexes the distinct strictly positive eigenvalues of
    ``mat_a`` in decreasing order; ``P_j`` projects onto the eigenvectors with
    eigenvalue at least ``alpha_j`` and ``Q`` onto the same number of leading
    eigenvectors of ``mat_b``. When ``||A - B|| < (alpha_j - alpha_{j+1}) / 4``
    the inequality ``||Q - P_j|| <= 2 ||A - B|| / (alpha_j - alpha_{j+1})``
    must hold.
    """
    a = np.asarray(mat_a, dtype=float)
    b = np.asarray(mat_b, dtype=float)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError("matrices must be square and of equal size")
    wa, va = np.linalg.eigh(a)
    order = np.argsort(wa)[::-1]
    wa, va = wa[order], va[:, order]
    scale = max(abs(wa[0]), 1.0)
    tol = 1e-12 * scale
    positive = wa[wa > tol]
    levels, counts = _distinct_levels(positive, tol)
    if not 1 <= j <= len(levels):
        raise IndexError(f"eigenvalue index {j} out of range 1..{len(levels)}")
    alpha_j = levels[j - 1]
    alpha_next = levels[j] if j < len(levels) else 0.0
    gap = alpha_j - alpha_next
    k = int(np.sum(counts[:j]))

    wb, vb = np.linalg.eigh(b)
    vb = vb[:, np.argsort(wb)[::-1]]
    pert = float(np.linalg.norm(a - b, 2))
    lhs = projection_distance(va[:, :k], vb[:, :k])
    rhs = 2.0 * pert / gap
    if not pert < gap / 4.0:
        return PerturbationCheck(lhs, rhs, None)
    return PerturbationCheck(lhs, rhs, bool(lhs <= rhs + 1e-12))
