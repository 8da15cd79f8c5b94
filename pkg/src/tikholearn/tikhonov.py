"""Spectral Tikhonov solutions and the oracle regularisation parameter.

The parameter ``t`` in ``[0, 1]`` weights ``t ||A z - y||^2 + (1 - t) ||z||^2``;
it maps to the classical ``alpha = (1 - t) / t``. Everything here works in the
singular basis of the model, where the solution is a diagonal filter

    Z^t = sum_i  t s_i / (t s_i^2 + 1 - t) * <y, u_i> v_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ParameterRangeError, ShapeError
from .model import ForwardModel, pseudo_inverse_apply

DEFAULT_GRID_POINTS = 512
DEFAULT_REFINE_TOL = 1e-10

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CoefficientFrame:
    """Signal and noise coordinates in the singular bases."""

    xi: np.ndarray
    nu: np.ndarray

    @classmethod
    def from_instance(cls, model: ForwardModel, y, x) -> "CoefficientFrame":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        eta = y - model.apply(x)
        return cls(model.signal_coefficients(x), model.data_coefficients(eta))


def _check_t(t):
    if not 0.0 <= t <= 1.0:
        raise ParameterRangeError(f"parameter out of range: t={t} not in [0, 1]")


def filter_factors(s, t):
    """``t s / (t s^2 + 1 - t)``; broadcasts over an array of ``t``."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if t.ndim:
        t = t[..., None]
    return t * s / (t * s * s + (1.0 - t))


def solve(model: ForwardModel, y, t: float) -> np.ndarray:
    """Tikhonov solution ``Z^t``; ``t = 1`` is the pseudo-inverse, ``t = 0`` is 0."""
    _check_t(t)
    if t == 1.0:
        return pseudo_inverse_apply(model, y)
    yc = model.data_coefficients(y)
    return model.svd_v @ (filter_factors(model.svd_s, t) * yc)


def _check_signal(model, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != model.n_features:
        raise ShapeError(f"signal must have length {model.n_features}, got {x.shape}")
    return x


def reconstruction_error(model: ForwardModel, y, x, t: float) -> float:
    """``||Z^t - x||``."""
    x = _check_signal(model, x)
    return float(np.linalg.norm(solve(model, y, t) - x))


def reconstruction_error_from_coefficients(model: ForwardModel, frame: CoefficientFrame,
                                           t: float, kernel_norm: float = 0.0) -> float:
    """Same quantity as :func:`reconstruction_error`, from ``(xi, nu)``.

    ``kernel_norm`` is the norm of the part of ``x`` in ``ker(A)``, which no
    filter can reach.
    """
    _check_t(t)
    s = model.svd_s
    b = t * s * s + (1.0 - t)
    r = (-(1.0 - t) * frame.xi + t * s * frame.nu) / b
    return float(math.sqrt(np.dot(r, r) + kernel_norm ** 2))


def _derivative(s, yc, xc, t):
    # H(t) = sum s yc (t s yc - b xc) / b^3 with b = t s^2 + 1 - t;
    # equivalent to the (xi, nu) form because yc = s xi + nu.
    b = t * s * s + (1.0 - t)
    return float(np.sum(s * yc * (t * s * yc - b * xc) / b ** 3))


def error_derivative(model: ForwardModel, y, x, t: float) -> float:
    """``H(t) = <R(t), R'(t)>``, half the derivative of ``||Z^t - x||^2``.

    Evaluated through the coefficient sum

        H(t) = sum_i s_i (-(1-t) xi_i + t s_i nu_i) (s_i xi_i + nu_i) / (t s_i^2 + 1 - t)^3.
    """
    _check_t(t)
    frame = CoefficientFrame.from_instance(model, y, _check_signal(model, x))
    s = model.svd_s
    b = t * s * s + (1.0 - t)
    num = (-(1.0 - t) * frame.xi + t * s * frame.nu) * (s * frame.xi + frame.nu)
    return float(np.sum(s * num / b ** 3))


def golden_section(f, lo: float, hi: float, tol: float, max_iter: int = 200):
    """Minimise a unimodal ``f`` on ``[lo, hi]`` down to bracket width ``tol``.

    Returns ``(x, f(x))`` for the best point seen.
    """
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def minimize_filter_error(s, yc, xc, grid_points: int = DEFAULT_GRID_POINTS,
                          refine_tol: float = DEFAULT_REFINE_TOL, offset: float = 0.0) -> float:
    """Global minimiser over ``[0, 1]`` of ``sum_i (f_i(t) yc_i - xc_i)^2``.

    A uniform grid, densified near ``t = 1`` on a log scale down to the
    square of the smallest singular value, locates the best basin.
    Golden-section search narrows it to ``refine_tol``, and when the
    derivative changes sign close to that point the root is polished with
    Brent's method.
    """
    if grid_points < 16:
        raise ValueError("grid_points must be at least 16")
    s = np.asarray(s, dtype=float)
    yc = np.asarray(yc, dtype=float)
    xc = np.asarray(xc, dtype=float)

    def objective(t):
        r = filter_factors(s, t) * yc - xc
        return float(np.dot(r, r)) + offset

    def deriv(t):
        return _derivative(s, yc, xc, t)

    grid = _search_grid(s, grid_points)
    grid_points = grid.size
    resid = filter_factors(s, grid) * yc - xc
    values = np.einsum("ij,ij->i", resid, resid) + offset
    k = int(np.argmin(values))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid_points - 1)]
    t_best, f_best = golden_section(objective, lo, hi, refine_tol)

    # endpoints are never sampled by the golden interior points
    for edge in (lo, hi):
        f_edge = objective(edge)
        if f_edge < f_best:
            t_best, f_best = edge, f_edge

    if 0.0 < t_best < 1.0:
        t_best = _polish_root(deriv, t_best, objective, f_best)
    return float(t_best)


def _search_grid(s, grid_points):
    # basins near t = 1 have width ~ s_min^2 and slip through a uniform grid
    uniform = np.linspace(0.0, 1.0, grid_points)
    s_min = float(np.min(np.abs(s))) if np.size(s) else 1.0
    lowest = max(2.0 * math.log10(max(s_min, 1e-150)) - 3.0, -300.0)
    if lowest >= -2.0:
        return uniform
    tail = 1.0 - np.logspace(lowest, -2.0, grid_points // 2)
    return np.unique(np.concatenate([uniform, tail]))


def _polish_root(deriv, t0, objective, f0):
    for delta in (1e-9, 1e-7, 1e-5, 1e-3):
        a, b = max(t0 - delta, 0.0), min(t0 + delta, 1.0)
        ha, hb = deriv(a), deriv(b)
        if ha < 0.0 < hb:
            t1 = brentq(deriv, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            return t1 if objective(t1) <= f0 + 1e-12 * (1.0 + abs(f0)) else t0
        if ha == 0.0:
            return a
        if hb == 0.0:
            return b
    return t0


def oracle_parameter(model: ForwardModel, y, x, grid_points: int = DEFAULT_GRID_POINTS,
                     refine_tol: float = DEFAULT_REFINE_TOL) -> float:
    """Optimal ``t*`` minimising ``||Z^t - x||`` over ``[0, 1]``.

    Returns 0 when ``y = 0``, where every ``t`` gives the same solution.
    """
    y = np.asarray(y, dtype=float)
    x = _check_signal(model, x)
    if not np.any(y):
        return 0.0
    return minimize_filter_error(model.svd_s, model.data_coefficients(y),
                                 model.signal_coefficients(x), grid_points, refine_tol)


def clamp_unit(s: float) -> float:
    return min(max(s, 0.0), 1.0)


def denoising_closed_form(y, x) -> float:
    """``clamp(<y, x> / <y, y>, 0, 1)``: the optimum for an identity operator."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != x.shape:
        raise ShapeError("y and x must have the same shape")
    yy = float(np.dot(y, y))
    if yy == 0.0:
        return 0.0
    return clamp_unit(float(np.dot(y, x)) / yy)


def t_to_alpha(t: float) -> float:
    if not 0.0 < t <= 1.0:
        if t == 0.0:
            raise ParameterRangeError("alpha infinite: t = 0")
        raise ParameterRangeError(f"parameter out of range: t={t}")
    return (1.0 - t) / t


def alpha_to_t(alpha: float) -> float:
    if alpha == math.inf:
        return 0.0
    if not alpha >= 0.0:
        raise ParameterRangeError(f"parameter out of range: alpha={alpha}")
    return 1.0 / (1.0 + alpha)


def tikhonov_objective(model: ForwardModel, y, z, t: float) -> float:
    """``t ||A z - y||^2 + (1 - t) ||z||^2``."""
    r = model.apply(z) - np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    return float(t * np.dot(r, r) + (1.0 - t) * np.dot(z, z))
