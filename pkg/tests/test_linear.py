import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lonjacast.models.linear import (
    LinearModel,
    linear_predict,
    ridge_fit,
    svr_fit,
    svr_objective,
)


def ridge_oracle_coordinate_descent(X, y, alpha, sweeps=20000, tol=1e-14):
    """Independent oracle: cyclic coordinate descent on the centered objective."""
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    d = X.shape[1]
    w = np.zeros(d)
    col_sq = (Xc * Xc).sum(axis=0)
    r = yc - Xc @ w
    for _ in range(sweeps):
        max_delta = 0.0
        for j in range(d):
            wj_old = w[j]
            rho = Xc[:, j] @ r + col_sq[j] * wj_old
            w[j] = rho / (col_sq[j] + alpha)
            delta = w[j] - wj_old
            if delta != 0.0:
                r -= delta * Xc[:, j]
            max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            break
    b = y.mean() - X.mean(axis=0) @ w
    return w, b


class TestRidge:
    def test_matches_coordinate_descent_oracle(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(60, 5))
        y = X @ rng.normal(size=5) + 0.1 * rng.normal(size=60)
        for alpha in [0.01, 1.0, 100.0]:
            m = ridge_fit(X, y, alpha)
            w_ref, b_ref = ridge_oracle_coordinate_descent(X, y, alpha)
            np.testing.assert_allclose(m.weights, w_ref, atol=1e-8)
            assert m.intercept == pytest.approx(b_ref, abs=1e-8)

    def test_normal_equation_residual(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(50, 8))
        y = rng.normal(size=50)
        alpha = 0.5
        m = ridge_fit(X, y, alpha)
        Xc = X - X.mean(axis=0)
        yc = y - y.mean()
        resid = (Xc.T @ Xc + alpha * np.eye(8)) @ m.weights - Xc.T @ yc
        assert np.max(np.abs(resid)) < 1e-8

    def test_alpha_zero_is_ols(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(40, 3))
        y = rng.normal(size=40)
        m = ridge_fit(X, y, 0.0)
        ones = np.column_stack([np.ones(40), X])
        beta, *_ = np.linalg.lstsq(ones, y, rcond=None)
        assert m.intercept == pytest.approx(beta[0], abs=1e-8)
        np.testing.assert_allclose(m.weights, beta[1:], atol=1e-8)

    def test_large_alpha_shrinks_to_mean(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(30, 4))
        y = rng.normal(size=30) + 5.0
        m = ridge_fit(X, y, 1e12)
        assert np.max(np.abs(m.weights)) < 1e-6
        assert m.intercept == pytest.approx(y.mean(), abs=1e-4)

    @given(st.floats(min_value=1e-6, max_value=1e6))
    @settings(max_examples=60, deadline=None)
    def test_weight_norm_monotone_in_alpha(self, alpha):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(35, 4))
        y = X @ np.array([1.0, -2.0, 0.5, 3.0]) + 0.05 * rng.normal(size=35)
        lo = ridge_fit(X, y, alpha)
        hi = ridge_fit(X, y, alpha * 10)
        assert np.linalg.norm(hi.weights) <= np.linalg.norm(lo.weights) + 1e-10

    def test_input_validation(self):
        X = np.ones((5, 2)) + np.arange(10).reshape(5, 2)
        y = np.arange(5.0)
        with pytest.raises(ValueError):
            ridge_fit(X, y, -1.0)
        with pytest.raises(ValueError):
            ridge_fit(X, y[:3], 1.0)
        with pytest.raises(ValueError):
            ridge_fit(X * np.nan, y, 1.0)

    def test_singular_unregularized_raises(self):
        X = np.zeros((10, 2))
        X[:, 0] = np.arange(10)
        X[:, 1] = 2 * X[:, 0]  # collinear
        y = np.arange(10.0)
        with pytest.raises(np.linalg.LinAlgError):
            ridge_fit(X, y, 0.0)

    def test_to_json_roundtrips(self):
        m = ridge_fit(np.arange(20.0).reshape(10, 2) ** 1.5, np.arange(10.0), 1.0)
        data = json.loads(m.to_json(feature_names=["a", "b"]))
        assert data["family"] == "ridge"
        assert data["feature_names"] == ["a", "b"]
        assert len(data["weights"]) == 2


class TestSvr:
    def make_problem(self, seed=0, n=80, d=3):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, d))
        w_true = np.array([1.5, -0.5, 2.0][:d])
        y = X @ w_true + 0.01 * rng.normal(size=n)
        return X, y

    def test_objective_formula(self):
        X = np.array([[1.0, 0.0], [0.0, 1.0]])
        y = np.array([2.0, -1.0])
        w = np.array([1.0, 1.0])
        # residuals: 2-1=1, -1-1=-2; hinge at eps=0.5: 0.5 + 1.5
        assert svr_objective(X, y, w, 0.0, C=2.0, epsilon=0.5) == pytest.approx(
            0.5 * 2.0 + 2.0 * 2.0
        )

    def test_beats_grid_oracle(self):
        """Subgradient solution must score within 5% of a brute-force grid."""
        X, y = self.make_problem(d=1, n=60)
        C, eps = 1.0, 0.05
        m = svr_fit(X, y, C, eps, seed=0)
        ws = np.linspace(-3, 3, 241)
        bs = np.linspace(-1, 1, 81)
        grid_best = min(
            svr_objective(X, y, np.array([w]), b, C, eps) for w in ws for b in bs
        )
        got = svr_objective(X, y, m.weights, m.intercept, C, eps)
        assert got <= grid_best * 1.05 + 1e-9

    def test_deterministic_given_seed(self):
        X, y = self.make_problem()
        a = svr_fit(X, y, 0.5, 0.01, seed=12)
        b = svr_fit(X, y, 0.5, 0.01, seed=12)
        np.testing.assert_array_equal(a.weights, b.weights)
        assert a.intercept == b.intercept

    def test_recovers_clean_linear_signal(self):
        X, y = self.make_problem(seed=5)
        m = svr_fit(X, y, C=10.0, epsilon=0.01, seed=1)
        pred = linear_predict(m, X)
        assert np.sqrt(np.mean((pred - y) ** 2)) < 0.15

    def test_epsilon_tube_ignores_small_errors(self):
        # every residual inside the tube -> zero hinge, objective = 0.5||w||^2
        X = np.eye(3)
        y = np.zeros(3)
        assert svr_objective(X, y, np.zeros(3), 0.0, C=1.0, epsilon=0.5) == 0.0

    def test_validation(self):
        X, y = self.make_problem()
        with pytest.raises(ValueError):
            svr_fit(X, y, C=0.0, epsilon=0.1)
        with pytest.raises(ValueError):
            svr_fit(X, y, C=1.0, epsilon=-0.1)

    def test_standardize_roundtrip(self):
        X, y = self.make_problem(seed=9)
        X = X * np.array([100.0, 0.01, 1.0]) + 50.0
        m = svr_fit(X, y, C=5.0, epsilon=0.01, seed=3, standardize=True)
        pred = linear_predict(m, X)
        assert np.sqrt(np.mean((pred - y) ** 2)) < 0.2


class TestLinearPredict:
    def test_shape_check(self):
        m = LinearModel(np.array([1.0, 2.0]), 0.5, "ridge", {})
        with pytest.raises(ValueError, match="features"):
            linear_predict(m, np.ones((4, 3)))

    def test_single_row(self):
        m = LinearModel(np.array([2.0]), 1.0, "ridge", {})
        np.testing.assert_allclose(linear_predict(m, np.array([3.0])), [7.0])
