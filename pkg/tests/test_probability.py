import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chernoff_net import Categorical, ObservationModel, kl_divergence, log_likelihoods, sample
from chernoff_net.errors import DimensionError, InfiniteDivergenceError
from chernoff_net.probability import PROB_FLOOR, clamp_probs

from conftest import bernoulli_model


def _dist(n):
    return st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n).map(lambda w: np.array(w) / sum(w))


class TestCategorical:
    def test_valid(self):
        p = Categorical([0.2, 0.8])
        assert p.size == 2
        np.testing.assert_allclose(p.cdf, [0.2, 1.0])

    @pytest.mark.parametrize("bad", [[1.0], [0.5, 0.6], [-0.1, 1.1], [np.nan, 1.0]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            Categorical(bad)

    def test_sum_tolerance(self):
        Categorical([0.5, 0.5 + 5e-13])
        with pytest.raises(ValueError):
            Categorical([0.5, 0.5 + 1e-10])

    def test_frozen(self):
        p = Categorical([0.5, 0.5])
        with pytest.raises(ValueError):
            p.probs[0] = 1.0


class TestKL:
    def test_identical(self):
        assert kl_divergence([0.5, 0.5], [0.5, 0.5]) == 0.0

    def test_hand_value(self):
        expected = 0.5 * math.log(2) + 0.5 * math.log(2 / 3)
        assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.14384, abs=1e-5)

    def test_zero_mass_term(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            kl_divergence([0.5, 0.5], [0.2, 0.3, 0.5])

    def test_infinite(self):
        with pytest.raises(InfiniteDivergenceError):
            kl_divergence([0.5, 0.5], [1.0, 0.0])

    def test_asymmetric(self):
        p, q = [0.9, 0.1], [0.5, 0.5]
        assert abs(kl_divergence(p, q) - kl_divergence(q, p)) > 0.1

    def test_accepts_categorical(self):
        assert kl_divergence(Categorical([0.5, 0.5]), Categorical([0.25, 0.75])) == pytest.approx(0.143841, abs=1e-6)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(2, 6).flatmap(lambda n: st.tuples(_dist(n), _dist(n))))
    def test_gibbs(self, pq):
        p, q = pq
        d = kl_divergence(p, q)
        assert d >= 0.0
        if np.allclose(p, q, atol=1e-12, rtol=0):
            assert d == pytest.approx(0.0, abs=1e-12)
        else:
            assert d > 0.0
        assert kl_divergence(p, p) == 0.0


class TestSample:
    def test_degenerate(self, rng):
        assert np.all(sample(Categorical([1.0, 0.0]), rng, size=1000) == 0)

    def test_frequency(self):
        draws = sample([0.5, 0.5], np.random.default_rng(3), size=10**6)
        assert 0.498 <= np.mean(draws == 0) <= 0.502

    def test_deterministic(self):
        a = sample([0.2, 0.3, 0.5], np.random.default_rng(9), size=50)
        b = sample([0.2, 0.3, 0.5], np.random.default_rng(9), size=50)
        np.testing.assert_array_equal(a, b)

    def test_scalar(self, rng):
        assert isinstance(sample([0.3, 0.7], rng), int)


class TestObservationModel:
    def test_shape_props(self):
        m = bernoulli_model([0.2, 0.8], L=3)
        assert (m.M, m.L, m.K, m.A) == (2, 3, 2, 2)
        assert m.dist(1, 2, 0) == Categorical([0.2, 0.8])

    def test_rejects_below_floor(self):
        probs = np.zeros((2, 1, 2, 2))
        probs[..., 0] = 1.0
        with pytest.raises(InfiniteDivergenceError):
            ObservationModel(probs)

    def test_rejects_bad_shape(self):
        with pytest.raises(DimensionError):
            ObservationModel(np.full((2, 2, 2), 0.5))

    def test_clamp_keeps_models_valid(self):
        raw = np.array([[0.0, 1.0], [1.0, 0.0]]).reshape(2, 1, 1, 2)
        m = ObservationModel(clamp_probs(raw))
        assert m.probs.min() >= PROB_FLOOR * (1 - 1e-9)
        assert np.isfinite(kl_divergence(m.probs[0, 0, 0], m.probs[1, 0, 0]))

    def test_separability(self):
        assert bernoulli_model([0.2, 0.8]).separability_violations() == []
        bad = bernoulli_model([0.5, 0.5])
        assert (0, 0, 1) in bad.separability_violations()

    def test_sensor_model(self):
        m = bernoulli_model([0.2, 0.8], L=3)
        assert m.sensor_model(1).L == 1


class TestLogLikelihoods:
    def test_identical(self):
        np.testing.assert_allclose(log_likelihoods(bernoulli_model([0.5, 0.5]), 0, 0, 1), [math.log(0.5)] * 2)

    def test_lookup(self):
        m = bernoulli_model([0.1, 0.9])   # P(obs=1) per hypothesis
        np.testing.assert_allclose(log_likelihoods(m, 0, 0, 0), [math.log(0.9), math.log(0.1)])

    def test_index_error(self):
        m = bernoulli_model([0.1, 0.9])
        for args in [(1, 0, 0), (0, 2, 0), (0, 0, 2), (-1, 0, 0)]:
            with pytest.raises(IndexError):
                log_likelihoods(m, *args)

    def test_accumulation_matches_exact_product(self, rng):
        p = np.array([[0.1, 0.6, 0.3], [0.3, 0.3, 0.4]])
        probs = np.broadcast_to(p[:, None, None, :], (2, 1, 1, 3))
        m = ObservationModel(probs)
        obs = rng.integers(3, size=20)
        cum = np.zeros(2)
        for a in obs:
            cum += log_likelihoods(m, 0, 0, int(a))
        for i in range(2):
            exact = math.prod(Fraction(p[i, a]) for a in obs)
            assert cum[i] == pytest.approx(math.log(exact), rel=1e-13)
