"""Synthetic signals and noise for the linear model ``Y = A X + sigma W``.

Signals live on an ``h``-dimensional subspace of the signal space; noise is
centred and isotropic. All randomness comes from counter-based Philox
generators so that a trial is a pure function of its seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyDataError, ShapeError
from .model import ForwardModel

SIGNAL_DISTS = ("gaussian_coefficients", "rademacher_coefficients", "deterministic")
NOISE_DISTS = ("gaussian_isotropic", "rademacher")

# Philox stream offsets used inside one trial
TRAIN_STREAM = 0
EVAL_STREAM = 1
OPERATOR_STREAM = 2


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for ``seed``; ``stream > 0`` selects a jumped substream."""
    bitgen = np.random.Philox(int(seed))
    if stream:
        bitgen = bitgen.jumped(stream)
    return np.random.Generator(bitgen)


def derive_seed(base_seed: int, trial_index: int) -> int:
    return (int(base_seed) ^ int(trial_index)) & 0xFFFFFFFFFFFFFFFF


def coordinate_basis(d: int, h: int) -> np.ndarray:
    """The first ``h`` canonical vectors of R^d as columns."""
    return np.eye(d, h)


def random_basis(d: int, h: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, h)))
    return q * np.sign(np.diag(r))


@dataclass(frozen=True, eq=False)
class SamplingSpec:
    """Distributions of the signal ``X`` and the noise ``W``.

    For ``signal_dist == "deterministic"`` the signal is drawn uniformly from
    ``signal_vectors``; ``subspace_basis`` then spans those vectors.
    """

    subspace_basis: np.ndarray
    signal_dist: str = "gaussian_coefficients"
    noise_dist: str = "gaussian_isotropic"
    sigma: float = 0.0
    signal_vectors: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        basis = np.atleast_2d(np.asarray(self.subspace_basis, dtype=float))
        if basis.shape[1] > basis.shape[0]:
            raise ShapeError("subspace basis needs h <= d")
        if not np.allclose(basis.T @ basis, np.eye(basis.shape[1]), atol=1e-10):
            raise ValueError("subspace basis columns must be orthonormal")
        if self.signal_dist not in SIGNAL_DISTS:
            raise ValueError(f"unknown signal distribution {self.signal_dist!r}")
        if self.noise_dist not in NOISE_DISTS:
            raise ValueError(f"unknown noise distribution {self.noise_dist!r}")
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")
        object.__setattr__(self, "subspace_basis", basis)
        if self.signal_dist == "deterministic":
            if self.signal_vectors is None:
                raise ValueError("deterministic signal needs signal_vectors")
            vecs = np.atleast_2d(np.asarray(self.signal_vectors, dtype=float))
            if vecs.shape[1] != basis.shape[0]:
                raise ShapeError("signal vectors must have length d")
            object.__setattr__(self, "signal_vectors", vecs)

    @property
    def d(self) -> int:
        return self.subspace_basis.shape[0]

    @property
    def h(self) -> int:
        return self.subspace_basis.shape[1]

    @classmethod
    def deterministic(cls, vectors: Sequence, noise_dist="rademacher", sigma=0.0):
        vecs = np.atleast_2d(np.asarray(vectors, dtype=float))
        u, s, _ = np.linalg.svd(vecs.T, full_matrices=False)
        basis = u[:, s > 1e-12 * max(s[0], 1e-300)]
        return cls(basis, "deterministic", noise_dist, sigma, vecs)


def sample_signals(spec: SamplingSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent signals, one per row."""
    if spec.signal_dist == "gaussian_coefficients":
        coef = rng.standard_normal((n, spec.h))
    elif spec.signal_dist == "rademacher_coefficients":
        coef = rng.choice(np.array([-1.0, 1.0]), size=(n, spec.h))
    else:
        vecs = spec.signal_vectors
        if len(vecs) == 1:
            return np.repeat(vecs, n, axis=0)
        return vecs[rng.integers(len(vecs), size=n)]
    return coef @ spec.subspace_basis.T


def sample_noises(spec: SamplingSpec, m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    if spec.noise_dist == "gaussian_isotropic":
        return rng.standard_normal((n, m))
    return rng.choice(np.array([-1.0, 1.0]), size=(n, m))


def sample_signal(spec: SamplingSpec, rng: np.random.Generator) -> np.ndarray:
    return sample_signals(spec, 1, rng)[0]


def sample_noise(spec: SamplingSpec, m: int, rng: np.random.Generator) -> np.ndarray:
    return sample_noises(spec, m, 1, rng)[0]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observations ``ys`` (n x m) with optional ground truth ``xs``, ``ws``."""

    ys: np.ndarray
    xs: Optional[np.ndarray] = None
    ws: Optional[np.ndarray] = None
    seed: Optional[int] = None
    spec: Optional[SamplingSpec] = None

    @property
    def n(self) -> int:
        return self.ys.shape[0]

    @property
    def m(self) -> int:
        return self.ys.shape[1]


def draw_instances(model: ForwardModel, spec: SamplingSpec, n: int, rng: np.random.Generator):
    """Return ``(xs, ws, ys)`` for ``n`` fresh instances."""
    if spec.d != model.n_features:
        raise ShapeError(f"signal dimension {spec.d} does not match operator ({model.n_features})")
    xs = sample_signals(spec, n, rng)
    ws = sample_noises(spec, model.m, n, rng)
    ys = xs @ model.a.T + spec.sigma * ws
    return xs, ws, ys


def generate_dataset(model: ForwardModel, spec: SamplingSpec, n: int, seed: int,
                     stream: int = TRAIN_STREAM) -> Dataset:
    """Training set ``y_i = A x_i + sigma w_i``, reproducible from ``seed``."""
    if n < 1:
        raise EmptyDataError("empty dataset: n must be at least 1")
    xs, ws, ys = draw_instances(model, spec, n, make_rng(seed, stream))
    return Dataset(ys=ys, xs=xs, ws=ws, seed=int(seed), spec=spec)


def estimate_subgaussian_norm(samples, n_directions: int = 64, q_max: int = 8,
                              rng: Optional[np.random.Generator] = None) -> float:
    """Monte-Carlo estimate of the sub-gaussian (psi_2) norm.

    Takes the maximum over random unit directions ``v`` and moment orders
    ``q = 1..q_max`` of ``q**-0.5 * mean(|<xi, v>|**q)**(1/q)``. Scalar
    samples are treated as one-dimensional vectors.
    """
    xi = np.asarray(samples, dtype=float)
    if xi.size == 0:
        raise EmptyDataError("no data")
    if q_max < 1:
        raise ValueError("q_max must be at least 1")
    if xi.ndim == 1:
        xi = xi[:, None]
    dim = xi.shape[1]
    if dim == 1:
        dirs = np.ones((1, 1))
    else:
        rng = rng if rng is not None else make_rng(0)
        dirs = rng.standard_normal((n_directions, dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    proj = np.abs(xi @ dirs.T)
    best = 0.0
    for q in range(1, q_max + 1):
        moment = np.mean(proj ** q, axis=0) ** (1.0 / q)
        best = max(best, float(np.max(moment)) / np.sqrt(q))
    return best


def tail_frequency(samples, direction, threshold: float) -> float:
    """Fraction of samples with ``|<xi, direction>| > threshold``."""
    xi = np.asarray(samples, dtype=float)
    if xi.ndim == 1:
        xi = xi[:, None]
    v = np.atleast_1d(np.asarray(direction, dtype=float))
    return float(np.mean(np.abs(xi @ v) > threshold))


def norm_tail_frequency(samples, threshold: float) -> float:
    xi = np.asarray(samples, dtype=float)
    if xi.ndim == 1:
        xi = xi[:, None]
    return float(np.mean(np.linalg.norm(xi, axis=1) > threshold))
