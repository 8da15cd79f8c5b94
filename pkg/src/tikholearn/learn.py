"""Learned regularisation parameter from an empirical subspace projection.

Given a projection ``Pi_hat`` fitted on training data, a new datum ``y`` is
split into ``x_hat = A^+ Pi_hat y`` and ``eta_hat = y - Pi_hat y``; the learned
parameter ``t_hat`` minimises ``||Z^t - x_hat||`` exactly as the oracle ``t*``
minimises ``||Z^t - x||``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LinearizationError
from .model import ForwardModel
from .subspace import SubspaceEstimate, estimate_signal_and_noise
from .tikhonov import (
    DEFAULT_GRID_POINTS,
    DEFAULT_REFINE_TOL,
    _check_t,
    clamp_unit,
    error_derivative,
    minimize_filter_error,
)

METHODS = ("grid_refine", "linearized", "closed_form_identity")
PILOT_GRID_POINTS = 32
DEFAULT_GAP_FACTOR = 10.0


@dataclass(frozen=True)
class ParamResult:
    t_hat: float
    method: str
    derivative_residual: float = math.nan
    boundary: bool = False

    @property
    def alpha_hat(self) -> float:
        return math.inf if self.t_hat == 0.0 else (1.0 - self.t_hat) / self.t_hat


def _hat_coefficients(model, x_hat, eta_hat):
    return model.signal_coefficients(x_hat), model.data_coefficients(eta_hat)


def empirical_derivative(model: ForwardModel, x_hat, eta_hat, t: float) -> float:
    """Derivative function of ``t -> 0.5 ||Z^t - x_hat||^2`` in coefficient form.

    ``sum_i (-(1-t) xi_i + t s_i nu_i) (xi_i s_i^2 + s_i nu_i) / (1 - (1 - s_i^2) t)^3``
    with ``xi = V^T x_hat`` and ``nu = U^T eta_hat``.
    """
    _check_t(t)
    xi, nu = _hat_coefficients(model, x_hat, eta_hat)
    s = model.svd_s
    denom = (1.0 - (1.0 - s * s) * t) ** 3
    return float(np.sum((-(1.0 - t) * xi + t * s * nu) * (xi * s * s + s * nu) / denom))


def empirical_derivative_projected(model: ForwardModel, y, pi_y, t: float) -> float:
    """Same derivative written with the datum ``y`` and its projection ``Pi_hat y``.

    ``< t A A^T (y - Pi_hat y) - (1 - t) Pi_hat y , (t A A^T + (1-t) I)^{+3} Q y >``,
    evaluated with dense ``m x m`` matrices and no use of the SVD factors.
    """
    _check_t(t)
    a = model.a
    y = np.asarray(y, dtype=float)
    pi_y = np.asarray(pi_y, dtype=float)
    aat = a @ a.T
    qy = aat @ np.linalg.pinv(aat, hermitian=True) @ y
    left = t * aat @ (y - pi_y) - (1.0 - t) * pi_y
    if t < 1.0:
        m_t = t * aat + (1.0 - t) * np.eye(model.m)
        right = np.linalg.solve(m_t, np.linalg.solve(m_t, np.linalg.solve(m_t, qy)))
    else:
        pinv = np.linalg.pinv(aat, hermitian=True)
        right = pinv @ (pinv @ (pinv @ qy))
    return float(left @ right)


def _result(model, x_hat, eta_hat, t_hat, method):
    boundary = t_hat in (0.0, 1.0)
    resid = empirical_derivative(model, x_hat, eta_hat, t_hat)
    return ParamResult(t_hat=float(t_hat), method=method, derivative_residual=resid,
                       boundary=boundary)


def learn_parameter(model: ForwardModel, est: SubspaceEstimate, y,
                    grid_points: int = DEFAULT_GRID_POINTS,
                    refine_tol: float = DEFAULT_REFINE_TOL) -> ParamResult:
    """Global minimiser ``t_hat`` of ``||Z^t - x_hat||`` on ``[0, 1]``."""
    y = np.asarray(y, dtype=float)
    x_hat, eta_hat = estimate_signal_and_noise(model, est, y)
    if not np.any(y):
        return ParamResult(0.0, "grid_refine", 0.0, True)
    t_hat = minimize_filter_error(model.svd_s, model.data_coefficients(y),
                                  model.signal_coefficients(x_hat), grid_points, refine_tol)
    return _result(model, x_hat, eta_hat, t_hat, "grid_refine")


def identity_closed_form(model: ForwardModel, est: SubspaceEstimate, y) -> ParamResult:
    """``clamp(<Q Pi_hat y, Q y> / ||Q y||^2)``, exact when every singular value is 1."""
    y = np.asarray(y, dtype=float)
    x_hat, eta_hat = estimate_signal_and_noise(model, est, y)
    yc = model.data_coefficients(y)
    yy = float(yc @ yc)
    if yy == 0.0:
        return ParamResult(0.0, "closed_form_identity", 0.0, True)
    py_c = model.data_coefficients(est.project(y))
    t_hat = clamp_unit(float(py_c @ yc) / yy)
    return _result(model, x_hat, eta_hat, t_hat, "closed_form_identity")


def linearized_parameter(model: ForwardModel, est: SubspaceEstimate, y) -> ParamResult:
    """Zero of the derivative after freezing ``B(t)`` at ``B(1) = A^T A``.

    Evaluates ``sum s^-5 a_i / sum s^-5 (s nu_i + xi_i)(s xi_i + nu_i)`` with
    ``a_i = xi_i (s xi_i + nu_i)``, which has no division by ``xi_i``, and
    clamps the result to ``[0, 1]``. :func:`linearized_ratio_dense` computes
    the same ratio from ``y`` and ``Pi_hat y`` directly.
    """
    y = np.asarray(y, dtype=float)
    x_hat, eta_hat = estimate_signal_and_noise(model, est, y)
    s = model.svd_s
    xi, nu = _hat_coefficients(model, x_hat, eta_hat)
    yc = s * xi + nu
    num = float(np.sum(xi * yc / s ** 5))
    den = float(np.sum((s * nu + xi) * yc / s ** 5))
    scale = float(np.sum(np.abs(yc) * (np.abs(s * nu) + np.abs(xi)) / s ** 5))
    if scale == 0.0 or abs(den) <= 1e-14 * scale:
        raise LinearizationError("linearization degenerate: zero denominator")
    ratio = num / den
    t_lin = clamp_unit(ratio)
    res = _result(model, x_hat, eta_hat, t_lin, "linearized")
    return ParamResult(res.t_hat, "linearized", res.derivative_residual,
                       boundary=(t_lin != ratio) or res.boundary)


def linearized_ratio_dense(model: ForwardModel, est: SubspaceEstimate, y) -> float:
    """Unclamped ``<Pi_hat y, (AA^T)^{+3} y> / <AA^T (y - Pi_hat y) + Pi_hat y, (AA^T)^{+3} y>``."""
    y = np.asarray(y, dtype=float)
    pi_y = est.project(y)
    aat = model.a @ model.a.T
    pinv = np.linalg.pinv(aat, hermitian=True)
    w = pinv @ (pinv @ (pinv @ y))
    den = float((aat @ (y - pi_y) + pi_y) @ w)
    if den == 0.0:
        raise LinearizationError("linearization degenerate: zero denominator")
    return float(pi_y @ w) / den


def derivative_gap(model: ForwardModel, y, x, est: SubspaceEstimate,
                   grid_points: int = 101) -> float:
    """``max_t |H_hat(t) - H(t)|`` over a uniform grid of ``[0, 1]``."""
    x_hat, eta_hat = estimate_signal_and_noise(model, est, y)
    grid = np.linspace(0.0, 1.0, grid_points)
    return max(
        abs(empirical_derivative(model, x_hat, eta_hat, t) - error_derivative(model, y, x, t))
        for t in grid
    )


def regression_map(model: ForwardModel, est: SubspaceEstimate, y,
                   prefer_linearized: bool = False,
                   grid_points: int = DEFAULT_GRID_POINTS,
                   refine_tol: float = DEFAULT_REFINE_TOL,
                   gap_factor: float = DEFAULT_GAP_FACTOR) -> ParamResult:
    """The deployed map ``y -> t_hat``.

    Identity-like operators use the closed form. If ``prefer_linearized`` and
    the smallest singular value clears ``gap_factor * (1 - t0)`` for a cheap
    32-point pilot ``t0``, the linearised formula is used. Everything else
    goes through :func:`learn_parameter`.
    """
    if model.is_identity_like:
        return identity_closed_form(model, est, y)
    if prefer_linearized:
        pilot = learn_parameter(model, est, y, PILOT_GRID_POINTS, 1e-3).t_hat
        if model.svd_s[-1] >= gap_factor * (1.0 - pilot):
            try:
                return linearized_parameter(model, est, y)
            except LinearizationError:
                pass
    return learn_parameter(model, est, y, grid_points, refine_tol)
