import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from cveval.errors import (
    LengthMismatch,
    MalformedAssignment,
    NonIdentityU,
    NotSPD,
    RowCountMismatch,
    SingularD,
    SingularInner,
    SingularShift,
)
from cveval.linalg import (
    IndicatorMatrix,
    TwoFactorConfig,
    column_counts,
    cross,
    gls_mean,
    gram,
    inv_identity_plus_scaled_gram,
    sufficient_stats,
    two_factor_covariance,
    two_factor_log_density,
    two_factor_precision,
    woodbury_inverse,
)


def ind(cols, n_cols=None):
    return IndicatorMatrix.from_assignment(cols, n_cols)


@st.composite
def indicators(draw, max_rows=30, max_cols=8):
    n_cols = draw(st.integers(1, max_cols))
    cols = draw(st.lists(st.integers(0, n_cols - 1), min_size=1, max_size=max_rows))
    return ind(cols, n_cols)


class TestIndicator:
    def test_gram(self):
        np.testing.assert_array_equal(gram(ind([0, 0, 1], 2)), [[1, 1, 0], [1, 1, 0], [0, 0, 1]])
        np.testing.assert_array_equal(gram(ind([2, 0, 1])), np.eye(3))
        np.testing.assert_array_equal(gram(ind([0])), [[1]])

    def test_malformed(self):
        with pytest.raises(MalformedAssignment):
            IndicatorMatrix(np.array([0, 3]), 2)

    def test_column_counts(self):
        assert column_counts(ind([0, 0, 1], 2)).tolist() == [2, 1]
        assert column_counts(ind([1, 2, 0])).tolist() == [1, 1, 1]
        assert column_counts(IndicatorMatrix(np.array([], dtype=int), 3)).tolist() == [0, 0, 0]

    def test_cross(self):
        U = ind([0, 0, 1], 2)
        np.testing.assert_array_equal(cross(U, U), np.diag(column_counts(U)))
        np.testing.assert_array_equal(cross(ind([0, 1]), ind([0, 0])), [[1], [1]])
        empty = IndicatorMatrix(np.array([], dtype=int), 2)
        np.testing.assert_array_equal(cross(empty, empty), np.zeros((2, 2)))
        with pytest.raises(RowCountMismatch):
            cross(ind([0]), ind([0, 1]))

    @given(indicators())
    def test_dense_identities(self, U):
        D = U.dense()
        np.testing.assert_array_equal(gram(U), D @ D.T)
        np.testing.assert_array_equal(D.T @ D, np.diag(column_counts(U)))
        assert column_counts(U).sum() == U.m
        G = gram(U)
        np.testing.assert_array_equal(G, G.T)
        c = column_counts(U)[U.cols]
        np.testing.assert_array_equal(G @ G, G * c[:, None])

    @given(indicators(), indicators())
    def test_cross_products(self, U, V):
        if U.m != V.m:
            return
        W = cross(U, V)
        np.testing.assert_array_equal(W, U.dense().T @ V.dense())
        # W^T W sums over pairs of responses sharing an item
        same_item = gram(U)
        WtW = V.dense().T @ same_item @ V.dense()
        np.testing.assert_array_equal(W.T @ W, WtW)
        WWt = U.dense().T @ gram(V) @ U.dense()
        np.testing.assert_array_equal(W @ W.T, WWt)


class TestInverseShift:
    def test_permutation(self):
        np.testing.assert_allclose(inv_identity_plus_scaled_gram(1.0, ind([1, 0, 2])), 0.5 * np.eye(3), atol=1e-15)

    @pytest.mark.parametrize("k", [-0.5, 0.1, 1.0, 10.0])
    def test_unit_counts_closed_form(self, k):
        U = ind([3, 0, 2, 1])
        closed = np.eye(4) - k / (k + 1) * gram(U)
        np.testing.assert_allclose(inv_identity_plus_scaled_gram(k, U), closed, atol=1e-12)

    def test_repeated_column(self):
        U = ind([0, 0])
        got = inv_identity_plus_scaled_gram(1.0, U)
        np.testing.assert_allclose(got, np.eye(2) - np.ones((2, 2)) / 3, atol=1e-15)
        np.testing.assert_allclose((np.eye(2) + np.ones((2, 2))) @ got, np.eye(2), atol=1e-12)

    def test_singular(self):
        with pytest.raises(SingularShift):
            inv_identity_plus_scaled_gram(-0.5, ind([0, 0]))

    @settings(max_examples=50)
    @given(indicators(max_rows=50), st.sampled_from([0.1, 1.0, 10.0]))
    def test_against_dense(self, U, k):
        A = np.eye(U.m) + k * gram(U)
        got = inv_identity_plus_scaled_gram(k, U)
        np.testing.assert_allclose(got @ A, np.eye(U.m), atol=1e-10)
        np.testing.assert_allclose(got, np.linalg.inv(A), atol=1e-10)


class TestWoodbury:
    def test_zero_update(self):
        A_inv = np.diag([1.0, 0.5])
        got = woodbury_inverse(A_inv, np.zeros((2, 1)), [[1.0]], np.zeros((1, 2)))
        np.testing.assert_array_equal(got, A_inv)

    def test_sherman_morrison(self):
        u = np.ones((2, 1))
        got = woodbury_inverse(np.eye(2), u, [[1.0]], u.T)
        np.testing.assert_allclose(got, np.eye(2) - np.ones((2, 2)) / 3, atol=1e-15)

    def test_random_spd(self):
        rng = np.random.default_rng(3)
        M = rng.standard_normal((6, 6))
        A = M @ M.T + 6 * np.eye(6)
        U = rng.standard_normal((6, 2))
        C = np.diag([0.7, 1.3])
        V = U.T
        got = woodbury_inverse(np.linalg.inv(A), U, np.linalg.inv(C), V)
        np.testing.assert_allclose(got, np.linalg.inv(A + U @ C @ V), atol=1e-10)

    def test_singular_inner(self):
        u = np.ones((2, 1))
        with pytest.raises(SingularInner):
            woodbury_inverse(np.eye(2), u, [[-2.0]], u.T)


def cfg_for(v, sx=1.0, sr=1.0, sw=1.0, mu=0.0, U=None):
    return TwoFactorConfig(mu_X=mu, sigma_X2=sx, sigma_W2=sw, sigma_R2=sr, V=ind(v), U=U)


class TestTwoFactor:
    def test_covariance_hand(self):
        np.testing.assert_array_equal(two_factor_covariance(cfg_for([0, 0, 1])), [[3, 1, 0], [1, 3, 0], [0, 0, 3]])

    def test_covariance_diagonal_and_zero(self):
        np.testing.assert_array_equal(two_factor_covariance(cfg_for([0, 0, 1], sw=0)), 2 * np.eye(3))
        np.testing.assert_array_equal(two_factor_covariance(cfg_for([0, 1], 0, 0, 0)), np.zeros((2, 2)))

    def test_shared_items_rejected(self):
        with pytest.raises(NonIdentityU):
            two_factor_covariance(cfg_for([0, 1], U=ind([0, 0])))
        # a permutation of items is fine
        two_factor_covariance(cfg_for([0, 1], U=ind([1, 0])))

    def test_precision(self):
        np.testing.assert_allclose(two_factor_precision(cfg_for([0, 1], sw=0)), np.eye(2) / 2, atol=1e-15)
        cfg = cfg_for([0, 0, 1])
        np.testing.assert_allclose(two_factor_precision(cfg) @ two_factor_covariance(cfg), np.eye(3), atol=1e-10)

    def test_precision_unit_groups_closed_form(self):
        # D = 1, sigma_W2 = 1: C = 1, C' = 1/2
        cfg = cfg_for([2, 0, 1], sx=0.5, sr=0.5, sw=1.0)
        V = cfg.V.dense()
        np.testing.assert_allclose(two_factor_precision(cfg), np.eye(3) - 0.5 * V @ V.T, atol=1e-15)

    def test_singular_d(self):
        with pytest.raises(SingularD):
            two_factor_precision(cfg_for([0, 1], sx=0, sr=0))

    def test_random_configs(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            m = int(rng.integers(1, 40))
            v = rng.integers(0, max(1, m // 2), m)
            cfg = cfg_for(v, *rng.uniform(0.05, 3, 3))
            P, S = two_factor_precision(cfg), two_factor_covariance(cfg)
            np.testing.assert_allclose(P @ S, np.eye(m), atol=1e-10)


class TestSufficientStats:
    def test_hand(self):
        s = sufficient_stats([1, 2, 3], ind([0, 0, 1]))
        assert s.as_tuple() == (14, 18, 6, 9)

    def test_zero(self):
        assert sufficient_stats([0, 0, 0], ind([0, 0, 1])).as_tuple() == (0, 0, 0, 0)

    def test_distinct_workers(self):
        y = np.array([0.5, -2.0, 3.0])
        s = sufficient_stats(y, ind([2, 0, 1]))
        assert s.t2 == pytest.approx(s.t1) and s.t4 == pytest.approx(s.t3)

    def test_length(self):
        with pytest.raises(LengthMismatch):
            sufficient_stats([1, 2], ind([0]))

    @given(indicators(), st.data())
    def test_against_dense(self, V, data):
        y = np.array(data.draw(st.lists(st.floats(-10, 10), min_size=V.m, max_size=V.m)))
        D = V.dense()
        s = sufficient_stats(y, V)
        np.testing.assert_allclose(
            s.as_tuple(), (y @ y, np.sum((D.T @ y) ** 2), y.sum(), np.ones(V.m) @ D @ D.T @ y), atol=1e-9
        )

    def test_sufficiency_of_log_density(self):
        """Two responses with equal T1..T4 get log-likelihoods that differ by a mu-free constant."""
        V = ind([0, 0, 1, 1])
        y1 = np.array([1.0, 3.0, -1.0, 0.0])
        # keep group sums (4, -1) and move within-group spread (total 2.5) between the groups
        a, b = 0.5, 1.0
        y2 = np.array([2 - a, 2 + a, -0.5 - b, -0.5 + b])
        s1, s2 = sufficient_stats(y1, V), sufficient_stats(y2, V)
        np.testing.assert_allclose(s1.as_tuple(), s2.as_tuple(), atol=1e-12)
        assert not np.allclose(y1, y2)
        for sx, sw, sr in [(1.0, 1.0, 1.0), (0.3, 2.0, 0.7), (2.5, 0.1, 0.4)]:
            diffs = []
            for mu in np.linspace(-3, 3, 13):
                cfg = TwoFactorConfig(mu, sx, sw, sr, V)
                diffs.append(two_factor_log_density(y1, cfg) - two_factor_log_density(y2, cfg))
            assert np.ptp(diffs) < 1e-8


class TestGLS:
    def test_identity(self):
        assert gls_mean([1, 2, 6], np.eye(3)) == pytest.approx(3, abs=1e-15)
        assert gls_mean([1, 2, 6], 2 * np.eye(3)) == pytest.approx(3, abs=1e-15)

    def test_two_factor_vs_solve(self):
        S = two_factor_covariance(cfg_for([0, 0, 1]))
        y = np.array([1.0, 2.0, 3.0])
        w = np.linalg.solve(S, np.ones(3))
        assert gls_mean(y, S) == pytest.approx(w @ y / w.sum(), abs=1e-10)

    def test_not_spd(self):
        with pytest.raises(NotSPD):
            gls_mean([1, 2], np.zeros((2, 2)))
        with pytest.raises(NotSPD):
            gls_mean([1, 2], [[1, 2], [0, 1]])

    def test_scale_invariance_and_argmin(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            m = int(rng.integers(2, 10))
            M = rng.standard_normal((m, m))
            S = M @ M.T + 0.5 * np.eye(m)
            y = rng.standard_normal(m)
            mu = gls_mean(y, S)
            assert gls_mean(y, 7.3 * S) == pytest.approx(mu, abs=1e-12)
            P = np.linalg.inv(S)
            res = minimize_scalar(lambda t: (y - t) @ P @ (y - t), bracket=(-10, 10), tol=1e-12)
            assert res.x == pytest.approx(mu, abs=1e-6)
