"""Forward operator with its thin SVD, normalised to unit spectral norm."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DecompositionError, DegenerateOperatorError, ShapeError

DEFAULT_RANK_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class ForwardModel:
    """Normalised operator ``a`` with ``a = svd_u @ diag(svd_s) @ svd_v.T``.

    ``d`` is the retained rank, i.e. the dimension of ``ker(a)^perp``.
    Signals still live in the ambient space of dimension ``n_features``;
    ``svd_v`` has shape ``(n_features, d)``.
    """

    a: np.ndarray
    m: int
    d: int
    svd_u: np.ndarray
    svd_s: np.ndarray
    svd_v: np.ndarray
    rescale_factor: float

    @property
    def n_features(self) -> int:
        return self.a.shape[1]

    @property
    def is_identity_like(self) -> bool:
        return bool(np.all(np.abs(self.svd_s - 1.0) <= 1e-12))

    def apply(self, x):
        return self.a @ _check_vector(x, self.n_features)

    def restrict(self, x):
        """Component of ``x`` in ``ker(a)^perp``."""
        x = _check_vector(x, self.n_features)
        return self.svd_v @ (self.svd_v.T @ x)

    def data_coefficients(self, y):
        """``<y, u_i>`` for every retained singular direction."""
        return self.svd_u.T @ _check_vector(y, self.m)

    def signal_coefficients(self, x):
        """``<x, v_i>`` for every retained singular direction."""
        return self.svd_v.T @ _check_vector(x, self.n_features)


def _check_vector(v, size):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != size:
        raise ShapeError(f"expected a vector of length {size}, got shape {v.shape}")
    return v


def build_forward_model(a, rank_tolerance: float = DEFAULT_RANK_TOLERANCE) -> ForwardModel:
    """Normalise ``a`` to ``||a|| = 1`` and restrict it to its numerical range.

    Singular triplets with ``s_i <= rank_tolerance * s_1`` are dropped, so
    the returned model is injective on ``ker(a)^perp``.

    Parameters
    ----------
    a : (m, n) array_like
        Operator matrix; must contain at least one nonzero entry.
    rank_tolerance : float
        Relative cutoff on the singular values.
    """
    a = np.array(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or 0 in a.shape:
        raise ShapeError(f"operator must be a nonempty matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DecompositionError("decomposition failed: operator has non-finite entries")
    if not np.any(a):
        raise DegenerateOperatorError("degenerate operator: all entries are zero")
    if rank_tolerance <= 0:
        raise ValueError("rank_tolerance must be positive")

    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"decomposition failed: {exc}") from exc

    scale = float(s[0])
    keep = s > rank_tolerance * scale
    u = u[:, keep]
    v = vt[keep].T
    s = s[keep] / scale

    # deterministic orientation: largest-magnitude entry of each v_i positive
    flip = np.sign(v[np.argmax(np.abs(v), axis=0), np.arange(v.shape[1])])
    flip[flip == 0] = 1.0
    u = u * flip
    v = v * flip

    a_norm = a / scale
    for arr in (a_norm, u, s, v):
        arr.setflags(write=False)
    return ForwardModel(
        a=a_norm, m=a.shape[0], d=int(s.size), svd_u=u, svd_s=s, svd_v=v,
        rescale_factor=scale,
    )


def pseudo_inverse_apply(model: ForwardModel, y) -> np.ndarray:
    """Return ``A^+ y = sum_i s_i^{-1} <y, u_i> v_i``."""
    yc = model.data_coefficients(y)
    return model.svd_v @ (yc / model.svd_s)


def range_projection(model: ForwardModel, y) -> np.ndarray:
    """Return ``Q y`` where ``Q = A A^+`` projects onto ``span(u_1..u_d)``."""
    yc = model.data_coefficients(y)
    return model.svd_u @ yc


def load_matrix_csv(path) -> np.ndarray:
    """Read a headerless comma-separated matrix, one row per line."""
    mat = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    return mat


def save_matrix_csv(path, a) -> None:
    np.savetxt(path, np.atleast_2d(np.asarray(a, dtype=float)), delimiter=",", fmt="%.17g")
