import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chernoff_net import DivergenceTable, PolicyCache, brute_force_maximin, divergence_table, kl_divergence, solve_maximin

from conftest import bernoulli_model, random_model


def table2(row):
    """M=2 table with d(0,1,.) = row and d(1,0,.) = row."""
    d = np.zeros((2, 2, len(row)))
    d[0, 1] = d[1, 0] = row
    return DivergenceTable(d)


def random_table(rng, M, K):
    d = rng.uniform(0, 2, size=(M, M, K))
    d[np.arange(M), np.arange(M)] = 0.0
    return DivergenceTable(d)


class TestDivergenceTable:
    def test_identical_zero(self):
        t = divergence_table(bernoulli_model([0.4, 0.4, 0.4]), 0)
        assert np.all(t.d == 0)

    def test_hand_value(self):
        m = bernoulli_model([0.5, 0.75])
        assert divergence_table(m, 0).d[0, 1, 0] == pytest.approx(0.14384, abs=1e-5)

    def test_matches_kl(self, rng):
        m = random_model(rng, 3, 2)
        for l in range(2):
            t = divergence_table(m, l)
            for i in range(3):
                for j in range(3):
                    for k in range(3):
                        assert t.d[i, j, k] == kl_divergence(m.probs[i, l, k], m.probs[j, l, k])

    @pytest.mark.parametrize("d", [np.ones((2, 2, 2)), -np.ones((2, 2, 2)), np.ones((2, 3, 2))])
    def test_rejects(self, d):
        with pytest.raises(ValueError):
            DivergenceTable(d)


class TestSolveMaximin:
    def test_m2_vertex(self):
        pmf = solve_maximin(table2([0.3, 0.1]), 0)
        np.testing.assert_allclose(pmf.q, [1.0, 0.0])
        assert pmf.value == pytest.approx(0.3)

    def test_m3_symmetric(self):
        d = np.zeros((3, 3, 3))
        d[0, 1] = [1, 0, 0]
        d[0, 2] = [0, 1, 0]
        pmf = solve_maximin(DivergenceTable(d), 0)
        np.testing.assert_allclose(pmf.q, [0.5, 0.5, 0.0], atol=1e-12)
        assert pmf.value == pytest.approx(0.5)
        assert brute_force_maximin(DivergenceTable(d), 0, 0.001).value == pytest.approx(0.5)

    def test_all_zero(self):
        pmf = solve_maximin(DivergenceTable(np.zeros((3, 3, 3))), 1)
        assert pmf.indistinguishable and pmf.value == 0.0
        np.testing.assert_allclose(pmf.q, [1 / 3] * 3)

    def test_lexicographic_tie_break(self):
        pmf = solve_maximin(table2([0.5, 0.5]), 0)
        np.testing.assert_allclose(pmf.q, [0.0, 1.0])

    def test_m2_matches_segment_scan(self):
        t = table2([0.2, 0.7, 0.4])
        assert solve_maximin(t, 0).value == pytest.approx(0.7)
        assert brute_force_maximin(t, 0, 0.01).value == pytest.approx(0.7)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 4), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_sandwich_and_feasibility(self, M, K, seed):
        t = random_table(np.random.default_rng(seed), M, K)
        for i in range(M):
            pmf = solve_maximin(t, i)
            D = t.rows(i)
            assert np.max(np.min(D, axis=0)) - 1e-12 <= pmf.value <= np.min(np.max(D, axis=1)) + 1e-12
            assert np.all(D @ pmf.q >= pmf.value - 1e-8)
            assert abs(pmf.q.sum() - 1) <= 1e-9 and np.all(pmf.q >= 0)

    @pytest.mark.parametrize("M", [2, 3, 4])
    def test_oracle_agreement(self, M):
        rng = np.random.default_rng(100 + M)
        step = 0.01
        for _ in range(30):
            t = random_table(rng, M, M)
            for i in range(M):
                lp, bf = solve_maximin(t, i).value, brute_force_maximin(t, i, step).value
                assert bf <= lp + 1e-12
                assert lp - bf <= step * t.d.max()

    def test_homogeneity(self, rng):
        t = random_table(rng, 3, 3)
        a = solve_maximin(t, 0)
        b = solve_maximin(DivergenceTable(2.5 * t.d), 0)
        assert b.value == pytest.approx(2.5 * a.value)
        np.testing.assert_allclose(2.5 * t.rows(0) @ a.q >= b.value - 1e-9, True)


class TestBruteForce:
    @pytest.mark.parametrize("step", [0.0, 0.6, -0.1])
    def test_bad_step(self, step):
        with pytest.raises(ValueError):
            brute_force_maximin(table2([0.3, 0.1]), 0, step)


class TestPolicyCache:
    def test_shapes_readonly(self, rng):
        m = random_model(rng, 3, 4)
        pc = PolicyCache(m)
        assert pc.v.shape == (4, 3) and pc.q.shape == (4, 3, 3) and pc.cdf.shape == (4, 3, 3)
        with pytest.raises(ValueError):
            pc.v[0, 0] = 1.0
        np.testing.assert_array_equal(pc.cdf[..., -1], 1.0)
        assert pc.indistinguishable() == []

    def test_indistinguishable(self):
        assert PolicyCache(bernoulli_model([0.3, 0.3])).indistinguishable() == [(0, 0), (0, 1)]
