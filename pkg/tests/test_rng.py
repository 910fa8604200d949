"""Reproducibility and distribution checks for the counter-based generator."""

import numpy as np
import pytest

from sentmix.rng import RngState, sample_beta


class TestDeterminism:
    def test_identical_seed_identical_stream(self):
        a = RngState(42).uniforms(100)
        b = RngState(42).uniforms(100)
        np.testing.assert_array_equal(a, b)

    def test_scalar_matches_vector_draws(self):
        r1 = RngState(7)
        r2 = RngState(7)
        scalars = [r1.uniform() for _ in range(20)]
        np.testing.assert_array_equal(scalars, r2.uniforms(20))

    def test_different_seeds_differ(self):
        assert not np.array_equal(RngState(1).uniforms(8), RngState(2).uniforms(8))

    def test_child_streams_fixed_and_distinct(self):
        root = RngState(5)
        c1 = root.child(1)
        c2 = root.child(2)
        assert c1.seed == RngState(5).child(1).seed
        assert c1.seed != c2.seed
        assert not np.array_equal(c1.uniforms(8), c2.uniforms(8))

    def test_counter_advances(self):
        r = RngState(0)
        first = r.uniform()
        second = r.uniform()
        assert first != second
        assert r.counter == 2


class TestUniform:
    def test_range(self):
        u = RngState(3).uniforms(10_000)
        assert (u >= 0.0).all() and (u < 1.0).all()

    def test_interval_scaling(self):
        r = RngState(3)
        values = [r.uniform(-3.0, 3.0) for _ in range(1000)]
        assert all(-3.0 <= v < 3.0 for v in values)


class TestNormal:
    def test_moments(self):
        z = RngState(11).normals(100_000)
        assert abs(z.mean()) < 0.02
        assert abs(z.std() - 1.0) < 0.02


class TestGamma:
    def test_positive_and_mean(self):
        r = RngState(13)
        draws = np.array([r.gamma(2.0) for _ in range(20_000)])
        assert (draws > 0.0).all()
        assert abs(draws.mean() - 2.0) < 0.05

    def test_shape_below_one(self):
        r = RngState(14)
        draws = np.array([r.gamma(0.5) for _ in range(5000)])
        assert (draws >= 0.0).all()
        assert abs(draws.mean() - 0.5) < 0.05

    def test_invalid_shape(self):
        with pytest.raises(ValueError):
            RngState(0).gamma(0.0)


class TestBeta:
    def test_range(self):
        r = RngState(21)
        draws = [sample_beta(r, 2.0) for _ in range(2000)]
        assert all(0.0 <= x <= 1.0 for x in draws)

    def test_symmetric_mean(self):
        # Equal shape parameters center the distribution on 0.5.
        r = RngState(22)
        draws = np.array([sample_beta(r, 2.0) for _ in range(100_000)])
        assert abs(draws.mean() - 0.5) < 0.01

    def test_variance_alpha_two(self):
        # Var Beta(2, 2) = 2*2 / (4^2 * 5) = 0.05
        r = RngState(23)
        draws = np.array([sample_beta(r, 2.0) for _ in range(50_000)])
        assert abs(draws.var() - 0.05) < 0.003

    def test_fixed_seed_replays(self):
        first = [sample_beta(RngState(9), 2.0) for _ in range(1)]
        second = [sample_beta(RngState(9), 2.0) for _ in range(1)]
        assert first == second

    def test_invalid_alpha(self):
        with pytest.raises(ValueError):
            sample_beta(RngState(0), -1.0)
        with pytest.raises(ValueError):
            sample_beta(RngState(0), 0.0)


class TestInts:
    def test_randint_bounds(self):
        r = RngState(31)
        values = [r.randint_below(7) for _ in range(5000)]
        assert min(values) == 0 and max(values) == 6

    def test_randint_invalid(self):
        with pytest.raises(ValueError):
            RngState(0).randint_below(0)

    def test_permutation_is_permutation(self):
        perm = RngState(33).permutation(50)
        assert sorted(perm.tolist()) == list(range(50))

    def test_permutation_deterministic(self):
        np.testing.assert_array_equal(RngState(4).permutation(20), RngState(4).permutation(20))
