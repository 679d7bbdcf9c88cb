import numpy as np
import pytest

from lonjacast.models.sarima import (
    SarimaModel,
    SarimaSpec,
    css_objective,
    difference,
    one_step_predictions,
    sarima_fit,
    sarima_forecast,
)


def simulate_arma(n, phi=(), theta=(), c=0.0, seed=0, burn=200):
    rng = np.random.default_rng(seed)
    e = rng.normal(size=n + burn)
    y = np.zeros(n + burn)
    p, q = len(phi), len(theta)
    for t in range(max(p, q), n + burn):
        y[t] = c + e[t]
        for i, f in enumerate(phi, 1):
            y[t] += f * y[t - i]
        for j, g in enumerate(theta, 1):
            y[t] += g * e[t - j]
    return y[burn:]


def css_oracle(series, spec, params):
    """Independent scalar-loop implementation of the conditional residual
    recursion, no polynomial expansion and no lfilter."""
    w = difference(series, spec.d, spec.D, spec.M)
    c = params[0]
    ar = params[1 : 1 + spec.p]
    ma = params[1 + spec.p : 1 + spec.p + spec.q]
    sar = params[1 + spec.p + spec.q : 1 + spec.p + spec.q + spec.P]
    sma = params[1 + spec.p + spec.q + spec.P :]
    base = np.zeros(spec.p + 1)
    base[0] = 1.0
    base[1:] = -ar
    seas = np.zeros(spec.P * spec.M + 1)
    seas[0] = 1.0
    for i, s in enumerate(sar, 1):
        seas[i * spec.M] = -s
    a = np.convolve(base, seas)
    mbase = np.zeros(spec.q + 1)
    mbase[0] = 1.0
    mbase[1:] = ma
    mseas = np.zeros(spec.Q * spec.M + 1)
    mseas[0] = 1.0
    for i, s in enumerate(sma, 1):
        mseas[i * spec.M] = s
    m = np.convolve(mbase, mseas)

    eps = {}
    total = 0.0
    for t in range(len(a) - 1, len(w)):
        val = -c
        for i in range(len(a)):
            val += a[i] * w[t - i]
        for j in range(1, len(m)):
            val -= m[j] * eps.get(t - j, 0.0)
        eps[t] = val
        total += val * val
    return total


class TestSpec:
    def test_rejects_negative_orders(self):
        with pytest.raises(ValueError):
            SarimaSpec(p=-1)

    def test_seasonal_orders_need_period(self):
        with pytest.raises(ValueError):
            SarimaSpec(P=1, M=1)
        SarimaSpec(P=1, M=12)

    def test_over_differencing(self):
        with pytest.raises(ValueError):
            SarimaSpec(d=3, D=1, M=12)
        SarimaSpec(d=1, D=1, M=12)  # the standard seasonal configuration

    def test_param_names(self):
        s = SarimaSpec(p=2, q=1, P=1, Q=1, M=12, d=1, D=1)
        assert s.param_names() == ["const", "ar1", "ar2", "ma1", "sar1", "sma1"]
        assert s.n_params == 6


class TestDifference:
    def test_first_difference(self):
        y = np.array([1.0, 3.0, 6.0, 10.0])
        np.testing.assert_allclose(difference(y, 1, 0, 1), [2.0, 3.0, 4.0])

    def test_seasonal_difference(self):
        y = np.arange(10.0)
        np.testing.assert_allclose(difference(y, 0, 1, 4), np.full(6, 4.0))

    def test_combined(self):
        y = np.random.default_rng(0).normal(size=30)
        w = difference(y, 1, 1, 7)
        manual = np.diff(y)
        manual = manual[7:] - manual[:-7]
        np.testing.assert_allclose(w, manual)


class TestCssObjective:
    def test_matches_scalar_oracle_ar1(self):
        y = simulate_arma(200, phi=(0.7,), seed=1)
        spec = SarimaSpec(p=1)
        params = np.array([0.1, 0.6])
        assert css_objective(y, spec, params) == pytest.approx(
            css_oracle(y, spec, params), rel=1e-10
        )

    def test_matches_scalar_oracle_seasonal(self):
        y = simulate_arma(300, phi=(0.5,), theta=(0.3,), seed=2)
        spec = SarimaSpec(p=1, d=1, q=1, P=1, D=0, Q=1, M=12)
        params = np.array([0.01, 0.4, 0.2, 0.1, -0.1])
        assert css_objective(y, spec, params) == pytest.approx(
            css_oracle(y, spec, params), rel=1e-9
        )

    def test_explosive_params_inf(self):
        y = simulate_arma(500, phi=(0.5,), seed=3)
        spec = SarimaSpec(q=1)
        assert css_objective(y, spec, np.array([0.0, -5.0])) == float("inf")
        assert css_objective(y, spec, np.array([np.nan, 0.2])) == float("inf")

    def test_fitted_point_is_local_minimum(self):
        y = simulate_arma(500, phi=(0.6,), theta=(0.4,), seed=4)
        spec = SarimaSpec(p=1, q=1)
        m = sarima_fit(y, spec, seed=0)
        base = css_objective(y, spec, m.params)
        rng = np.random.default_rng(0)
        for _ in range(20):
            perturbed = m.params + rng.normal(0, 0.02, size=len(m.params))
            assert css_objective(y, spec, perturbed) >= base - 1e-6


class TestFit:
    def test_ar1_recovery_matches_ols_oracle(self):
        y = simulate_arma(2000, phi=(0.8,), seed=5)
        m = sarima_fit(y, SarimaSpec(p=1), seed=0)
        assert m.ar[0] == pytest.approx(0.8, abs=0.05)
        # oracle: direct OLS of y_t on [1, y_{t-1}]
        X = np.column_stack([np.ones(len(y) - 1), y[:-1]])
        beta, *_ = np.linalg.lstsq(X, y[1:], rcond=None)
        assert m.ar[0] == pytest.approx(beta[1], abs=1e-10)
        assert m.constant == pytest.approx(beta[0], abs=1e-10)

    def test_ma1_recovery(self):
        y = simulate_arma(2000, theta=(0.5,), seed=6)
        m = sarima_fit(y, SarimaSpec(q=1), seed=0)
        assert m.ma[0] == pytest.approx(0.5, abs=0.05)

    def test_deterministic_given_seed(self):
        y = simulate_arma(400, phi=(0.5,), theta=(0.3,), seed=7)
        a = sarima_fit(y, SarimaSpec(p=1, q=1), seed=3)
        b = sarima_fit(y, SarimaSpec(p=1, q=1), seed=3)
        np.testing.assert_array_equal(a.params, b.params)

    def test_short_series_rejected(self):
        with pytest.raises(ValueError, match="observations"):
            sarima_fit(np.ones(15) + np.arange(15), SarimaSpec(p=2, q=2))

    def test_non_finite_rejected(self):
        y = np.ones(100)
        y[3] = np.nan
        with pytest.raises(ValueError):
            sarima_fit(y, SarimaSpec(p=1))

    def test_to_json(self):
        import json

        y = simulate_arma(300, phi=(0.5,), seed=8)
        m = sarima_fit(y, SarimaSpec(p=1), seed=0)
        data = json.loads(m.to_json("abc123"))
        assert data["family"] == "sarima"
        assert set(data["params"]) == {"const", "ar1"}
        assert data["trained_on"] == "abc123"


class TestForecast:
    def test_ar1_converges_to_unconditional_mean(self):
        y = simulate_arma(1500, phi=(0.7,), c=0.6, seed=9)
        m = sarima_fit(y, SarimaSpec(p=1), seed=0)
        far = sarima_forecast(m, 200)
        mean = m.constant / (1.0 - m.ar[0])
        assert far[-1] == pytest.approx(mean, abs=0.02)

    def test_ar1_first_step_closed_form(self):
        y = simulate_arma(800, phi=(0.7,), seed=10)
        m = sarima_fit(y, SarimaSpec(p=1), seed=0)
        f1 = sarima_forecast(m, 1)[0]
        assert f1 == pytest.approx(m.constant + m.ar[0] * y[-1], abs=1e-10)

    def test_random_walk_forecast_flat(self):
        y = np.cumsum(np.random.default_rng(11).normal(size=300))
        m = sarima_fit(y, SarimaSpec(p=0, d=1), seed=0)
        f = sarima_forecast(m, 5)
        drift = m.constant
        np.testing.assert_allclose(np.diff(f), drift, atol=1e-10)
        assert f[0] == pytest.approx(y[-1] + drift, abs=1e-10)

    def test_steps_validation(self):
        y = simulate_arma(300, phi=(0.5,), seed=12)
        m = sarima_fit(y, SarimaSpec(p=1), seed=0)
        with pytest.raises(ValueError):
            sarima_forecast(m, 0)


class TestOneStep:
    def test_identity_with_residuals(self):
        y = simulate_arma(500, phi=(0.6,), theta=(0.2,), seed=13)
        spec = SarimaSpec(p=1, q=1)
        m = sarima_fit(y, spec, seed=0)
        preds = one_step_predictions(m, y)
        assert np.isnan(preds[0])
        valid = ~np.isnan(preds)
        # prediction errors on the original scale are exactly the CSS residuals
        np.testing.assert_allclose(y[valid] - preds[valid], m.residuals, atol=1e-10)

    def test_tracks_ar1(self):
        y = simulate_arma(600, phi=(0.8,), seed=14)
        m = sarima_fit(y, SarimaSpec(p=1), seed=0)
        preds = one_step_predictions(m, y)
        manual = m.constant + m.ar[0] * y[:-1]
        np.testing.assert_allclose(preds[1:], manual, atol=1e-10)
