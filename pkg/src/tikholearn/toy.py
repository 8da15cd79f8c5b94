"""Closed forms for the two-dimensional toy problem.

Orthogonal ``A = (A_1 | A_2)``, deterministic ``X = (1, 0)``, Rademacher
noise. The noise enters only through ``sigma_i = sigma <W, A_i>``, and an
empirical projection perturbs ``A^{-1} Pi Y = (1 + sigma_1, 0)`` by
``(eps_1, eps_2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ForwardModel, build_forward_model
from .tikhonov import clamp_unit


@dataclass(frozen=True)
class ToyInstance:
    sigma1: float
    sigma2: float
    eps1: float = 0.0
    eps2: float = 0.0
    sigma: float = math.nan

    @classmethod
    def from_noise(cls, a, w, sigma: float, eps1: float = 0.0, eps2: float = 0.0):
        a = np.asarray(a, dtype=float)
        s1, s2 = sigma * (a.T @ np.asarray(w, dtype=float))
        return cls(float(s1), float(s2), eps1, eps2, sigma)

    @property
    def denominator(self) -> float:
        return (1.0 + self.sigma1) ** 2 + self.sigma2 ** 2


@dataclass(frozen=True)
class ToyErrors:
    err_xbar: float
    r_tstar: float
    r_tbar: float


@dataclass(frozen=True)
class ToyProjectedErrors:
    r_pi_tstar: float
    r_pi_tbar: float


def _denominator(inst: ToyInstance) -> float:
    den = inst.denominator
    if not den > 0.0:
        raise ZeroDivisionError("degenerate denominator: (1 + sigma1)^2 + sigma2^2 = 0")
    return den


def exact_t_star(inst: ToyInstance) -> float:
    return clamp_unit((1.0 + inst.sigma1) / _denominator(inst))


def exact_t_bar(inst: ToyInstance) -> float:
    """Minimiser of ``||Z^t - X_bar||`` with ``X_bar = (1 + sigma_1, 0)``."""
    return clamp_unit((1.0 + inst.sigma1) ** 2 / _denominator(inst))


def exact_t_hat_n(inst: ToyInstance) -> float:
    """Minimiser of ``||Z^t - X_hat||`` with ``X_hat = (1 + sigma_1 + eps_1, eps_2)``.

    ``Z^t = t (1 + sigma_1, sigma_2)``, so the optimum is the projection
    coefficient ``((1+s1)^2 + (1+s1) e1 + s2 e2) / ((1+s1)^2 + s2^2)``.
    """
    s1, s2, e1, e2 = inst.sigma1, inst.sigma2, inst.eps1, inst.eps2
    return clamp_unit(((1.0 + s1) ** 2 + (1.0 + s1) * e1 + s2 * e2) / _denominator(inst))


def printed_t_hat_n(inst: ToyInstance) -> float:
    """The variant with ``(1 + eps_1)^2`` in place of ``(1 + sigma_1)^2``, unclamped.

    Kept only to log where it departs from :func:`exact_t_hat_n`; it is not
    the minimiser unless ``eps_1 = sigma_1``.
    """
    s1, s2, e1, e2 = inst.sigma1, inst.sigma2, inst.eps1, inst.eps2
    return (s2 * e2 + (1.0 + s1) * e1 + (1.0 + e1) ** 2) / _denominator(inst)


def exact_errors(inst: ToyInstance) -> ToyErrors:
    den = _denominator(inst)
    s1, s2 = inst.sigma1, inst.sigma2
    r_tstar = abs(s2) / math.sqrt(den)
    r_tbar = math.sqrt(s1 ** 2 * (1.0 + s1) ** 2 + s2 ** 2) / math.sqrt(den)
    return ToyErrors(err_xbar=abs(s1), r_tstar=r_tstar, r_tbar=r_tbar)


def projected_error(inst: ToyInstance, t: float) -> float:
    """``||Pi Z^t - X||`` from ``(1 + s1)^2 t^2 - 2 t (1 + s1) + 1``."""
    c = 1.0 + inst.sigma1
    return math.sqrt(max(c * c * t * t - 2.0 * t * c + 1.0, 0.0))


def exact_projected_errors(inst: ToyInstance) -> ToyProjectedErrors:
    """Projected error at the unclamped ``t*`` and ``t_bar``."""
    den = _denominator(inst)
    c = 1.0 + inst.sigma1
    return ToyProjectedErrors(r_pi_tstar=projected_error(inst, c / den),
                              r_pi_tbar=projected_error(inst, c * c / den))


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, eq=False)
class ToyProblem:
    """A concrete 2x2 instance realising a :class:`ToyInstance`."""

    model: ForwardModel
    x: np.ndarray
    y: np.ndarray
    x_bar: np.ndarray
    x_hat: np.ndarray


def build_toy_problem(inst: ToyInstance, angle: float = 0.0) -> ToyProblem:
    """``Y = A_1 + sigma_1 A_1 + sigma_2 A_2`` for the rotation ``A`` by ``angle``."""
    a = rotation(angle)
    model = build_forward_model(a)
    x = np.array([1.0, 0.0])
    y = (1.0 + inst.sigma1) * a[:, 0] + inst.sigma2 * a[:, 1]
    x_bar = np.array([1.0 + inst.sigma1, 0.0])
    x_hat = np.array([1.0 + inst.sigma1 + inst.eps1, inst.eps2])
    return ToyProblem(model, x, y, x_bar, x_hat)


def sweep(sigmas, ratio: float) -> list:
    """Toy errors along ``sigma_1 = ratio * sigma`` with ``sigma_1^2 + sigma_2^2 = 2 sigma^2``.

    ``ratio`` must satisfy ``ratio^2 <= 2``. Returns one dict per sigma.
    """
    if ratio * ratio > 2.0:
        raise ValueError("ratio^2 must not exceed 2 for Rademacher noise in 2D")
    rows = []
    for sig in sigmas:
        inst = ToyInstance(ratio * sig, abs(sig) * math.sqrt(2.0 - ratio * ratio), sigma=sig)
        errs = exact_errors(inst)
        proj = exact_projected_errors(inst)
        rows.append({
            "sigma": float(sig),
            "sigma1": inst.sigma1,
            "sigma2": inst.sigma2,
            "t_star": exact_t_star(inst),
            "t_bar": exact_t_bar(inst),
            "err_xbar": errs.err_xbar,
            "r_tstar": errs.r_tstar,
            "r_tbar": errs.r_tbar,
            "r_pi_tstar": proj.r_pi_tstar,
            "r_pi_tbar": proj.r_pi_tbar,
        })
    return rows
