import math

import numpy as np
import pytest

from tikholearn.errors import EmptyDataError, ShapeError
from tikholearn.model import build_forward_model
from tikholearn.sampling import (
    EVAL_STREAM,
    TRAIN_STREAM,
    SamplingSpec,
    coordinate_basis,
    derive_seed,
    draw_instances,
    estimate_subgaussian_norm,
    generate_dataset,
    make_rng,
    norm_tail_frequency,
    random_basis,
    sample_noise,
    sample_noises,
    sample_signal,
    sample_signals,
    tail_frequency,
)

from conftest import random_operator


class TestSamplingSpec:
    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError, match="orthonormal"):
            SamplingSpec(np.array([[1.0], [1.0]]))

    def test_rejects_h_above_d(self):
        with pytest.raises(ShapeError):
            SamplingSpec(np.eye(2, 3))

    def test_rejects_negative_sigma(self):
        with pytest.raises(ValueError):
            SamplingSpec(coordinate_basis(3, 1), sigma=-0.1)

    def test_rejects_unknown_distribution(self):
        with pytest.raises(ValueError):
            SamplingSpec(coordinate_basis(3, 1), signal_dist="cauchy")

    def test_dimensions(self):
        spec = SamplingSpec(coordinate_basis(7, 2))
        assert (spec.d, spec.h) == (7, 2)


class TestSignals:
    def test_single_direction(self, rng):
        spec = SamplingSpec(coordinate_basis(5, 1))
        for _ in range(10):
            x = sample_signal(spec, rng)
            assert np.all(x[1:] == 0.0) and x[0] != 0.0

    def test_deterministic_sparse_vector(self, rng):
        spec = SamplingSpec.deterministic([[1.0, 0.0, 0.0]])
        for _ in range(5):
            np.testing.assert_array_equal(sample_signal(spec, rng), [1.0, 0.0, 0.0])
        assert spec.h == 1

    def test_deterministic_list_is_uniform(self, rng):
        vecs = np.eye(3)
        spec = SamplingSpec.deterministic(vecs)
        draws = sample_signals(spec, 30000, rng)
        freq = draws.mean(axis=0)
        np.testing.assert_allclose(freq, [1 / 3] * 3, atol=0.02)

    def test_gaussian_rank(self, rng):
        basis = random_basis(20, 5, rng)
        spec = SamplingSpec(basis)
        xs = sample_signals(spec, 100000, rng)
        w = np.linalg.eigvalsh(xs.T @ xs / len(xs))
        assert int(np.sum(w > 1e-10 * w.max())) == 5

    def test_in_subspace(self, rng):
        basis = random_basis(10, 3, rng)
        spec = SamplingSpec(basis, signal_dist="rademacher_coefficients")
        xs = sample_signals(spec, 50, rng)
        np.testing.assert_allclose(xs - xs @ basis @ basis.T, 0.0, atol=1e-12)


class TestNoise:
    def test_rademacher_two_dim(self, rng):
        spec = SamplingSpec(coordinate_basis(2, 1), noise_dist="rademacher")
        for _ in range(20):
            w = sample_noise(spec, 2, rng)
            assert set(np.abs(w)) == {1.0}
            assert np.linalg.norm(w) == pytest.approx(math.sqrt(2.0), abs=1e-15)

    def test_gaussian_centred(self, rng):
        spec = SamplingSpec(coordinate_basis(4, 1))
        ws = sample_noises(spec, 6, 100000, rng)
        assert np.linalg.norm(ws.mean(axis=0)) <= 4 * math.sqrt(6 / 100000)

    def test_gaussian_isotropic(self, rng):
        spec = SamplingSpec(coordinate_basis(4, 1))
        ws = sample_noises(spec, 5, 100000, rng)
        np.testing.assert_allclose(ws.T @ ws / len(ws), np.eye(5), atol=5e-2)

    def test_signal_noise_uncorrelated(self, rng):
        model = build_forward_model(np.eye(6))
        spec = SamplingSpec(random_basis(6, 3, rng), sigma=1.0)
        xs, ws, _ = draw_instances(model, spec, 100000, rng)
        for _ in range(10):
            v, u = rng.standard_normal(6), rng.standard_normal(6)
            assert abs(np.corrcoef(xs @ v, ws @ u)[0, 1]) <= 0.02


class TestDataset:
    def _setup(self, rng, sigma=0.1):
        model = build_forward_model(random_operator(rng, 8, 10, 0.8 ** np.arange(8)))
        spec = SamplingSpec(random_basis(10, 3, rng), sigma=sigma)
        return model, spec

    def test_model_equation(self, rng):
        model, spec = self._setup(rng)
        data = generate_dataset(model, spec, 200, seed=3)
        resid = data.ys - data.xs @ model.a.T - spec.sigma * data.ws
        assert np.max(np.abs(resid)) <= 1e-12
        assert (data.n, data.m) == (200, 8)

    def test_noiseless_in_range(self, rng):
        model, spec = self._setup(rng, sigma=0.0)
        data = generate_dataset(model, spec, 50, seed=1)
        q, _ = np.linalg.qr(model.a @ spec.subspace_basis)
        np.testing.assert_allclose(data.ys - data.ys @ q @ q.T, 0.0, atol=1e-12)

    def test_reproducible(self, rng):
        model, spec = self._setup(rng)
        d1 = generate_dataset(model, spec, 30, seed=99)
        d2 = generate_dataset(model, spec, 30, seed=99)
        assert d1.ys.tobytes() == d2.ys.tobytes()
        d3 = generate_dataset(model, spec, 30, seed=99, stream=EVAL_STREAM)
        assert not np.array_equal(d1.ys, d3.ys)

    def test_empty(self, rng):
        model, spec = self._setup(rng)
        with pytest.raises(EmptyDataError, match="empty dataset"):
            generate_dataset(model, spec, 0, seed=0)

    def test_dimension_mismatch(self, rng):
        model, _ = self._setup(rng)
        spec = SamplingSpec(coordinate_basis(9, 2))
        with pytest.raises(ShapeError):
            generate_dataset(model, spec, 5, seed=0)

    def test_identity_gap(self):
        model = build_forward_model(np.eye(1000))
        spec = SamplingSpec(coordinate_basis(1000, 5), sigma=0.1)
        data = generate_dataset(model, spec, 1000, seed=0)
        w = np.linalg.eigvalsh(data.ys.T @ data.ys / data.n)[::-1]
        assert w[4] > 20 * w[5]


class TestSeeds:
    def test_derive_seed_xor(self):
        assert derive_seed(0b1010, 0b0110) == 0b1100
        assert derive_seed(5, 0) == 5

    def test_streams_differ(self):
        a = make_rng(1, TRAIN_STREAM).standard_normal(4)
        b = make_rng(1, EVAL_STREAM).standard_normal(4)
        assert not np.array_equal(a, b)


class TestSubgaussianNorm:
    def test_zero(self):
        assert estimate_subgaussian_norm(np.zeros((100, 3))) == 0.0

    def test_rademacher_scalar(self, rng):
        est = estimate_subgaussian_norm(rng.choice([-1.0, 1.0], size=10000), q_max=2)
        assert 0.5 <= est <= 1.1

    def test_gaussian_scalar(self, rng):
        est = estimate_subgaussian_norm(rng.standard_normal(100000), q_max=6)
        assert 0.75 <= est <= 1.35

    def test_empty(self):
        with pytest.raises(EmptyDataError, match="no data"):
            estimate_subgaussian_norm(np.zeros((0, 2)))

    def test_bad_q(self):
        with pytest.raises(ValueError):
            estimate_subgaussian_norm(np.ones(3), q_max=0)


class TestTailFrequency:
    def test_scalar(self):
        assert tail_frequency(np.array([0.0, 1.0, 2.0, 3.0]), 1.0, 1.5) == 0.5

    def test_norm(self):
        assert norm_tail_frequency(np.array([[3.0, 4.0], [0.0, 1.0]]), 2.0) == 0.5

    def test_small_ball_probability(self, rng):
        # P[||X|| < r] <= 2 exp(-1/r^2) checked at a few radii
        spec = SamplingSpec(coordinate_basis(20, 5))
        norms = np.linalg.norm(sample_signals(spec, 100000, rng), axis=1)
        for r in (0.5, 1.0, 1.5, 2.0):
            assert np.mean(norms < r) <= 2 * math.exp(-1 / r ** 2) + 3 * math.sqrt(0.25 / 1e5)
