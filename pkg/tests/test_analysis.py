import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lonjacast.analysis import (
    AdfResult,
    adf_critical_values,
    adf_test,
    pearson_matrix,
    select_markets,
)
from lonjacast.core import IsoWeek, MarketId, week_range
from lonjacast.ingest import PricePanel


def make_panel(values: np.ndarray, names: list[str] | None = None) -> PricePanel:
    n, k = values.shape
    names = names or [f"M{j}" for j in range(k)]
    weeks = week_range(IsoWeek(2020, 1), IsoWeek(2020, 1))
    from lonjacast.core import week_add

    weeks = tuple(week_add(IsoWeek(2020, 1), i) for i in range(n))
    return PricePanel(
        markets=tuple(MarketId(x) for x in names),
        weeks=weeks,
        values=values,
        fill_flags=np.zeros_like(values, dtype=bool),
    )


def manual_pearson(a: np.ndarray, b: np.ndarray) -> float:
    # independent oracle: textbook formula, no numpy.corrcoef
    am, bm = a - a.mean(), b - b.mean()
    return float((am * bm).sum() / np.sqrt((am * am).sum() * (bm * bm).sum()))


class TestPearson:
    def test_matches_textbook_formula(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(40, 4))
        m = pearson_matrix(make_panel(x))
        for i in range(4):
            for j in range(4):
                expected = manual_pearson(x[:, i], x[:, j])
                assert m.r[i, j] == pytest.approx(expected, abs=1e-12)

    def test_symmetric_unit_diagonal(self):
        rng = np.random.default_rng(5)
        m = pearson_matrix(make_panel(rng.normal(size=(30, 5))))
        assert np.allclose(m.r, m.r.T)
        assert np.allclose(np.diag(m.r), 1.0)
        assert np.all(np.abs(m.r) <= 1.0)

    def test_constant_column_raises_with_market_name(self):
        x = np.random.default_rng(0).normal(size=(20, 2))
        x[:, 1] = 1.5
        with pytest.raises(ValueError, match="M1"):
            pearson_matrix(make_panel(x))

    def test_too_short_panel(self):
        with pytest.raises(ValueError, match="3 rows"):
            pearson_matrix(make_panel(np.ones((2, 2)) + np.arange(4).reshape(2, 2)))

    @given(
        st.floats(min_value=0.1, max_value=10),
        st.floats(min_value=-5, max_value=5),
    )
    @settings(max_examples=50)
    def test_affine_invariance(self, scale, shift):
        # r(aX + b, Y) == r(X, Y) for a > 0
        rng = np.random.default_rng(11)
        x = rng.normal(size=(25, 3))
        base = pearson_matrix(make_panel(x))
        x2 = x.copy()
        x2[:, 0] = scale * x2[:, 0] + shift
        transformed = pearson_matrix(make_panel(x2))
        assert np.allclose(base.r, transformed.r, atol=1e-10)

    def test_to_csv_shape(self):
        m = pearson_matrix(make_panel(np.random.default_rng(0).normal(size=(10, 3))))
        lines = m.to_csv().strip().split("\n")
        assert lines[0] == "market,M0,M1,M2"
        assert len(lines) == 4


class TestSelectMarkets:
    def make(self, r_with_target):
        k = len(r_with_target) + 1
        r = np.eye(k)
        r[0, 1:] = r[1:, 0] = r_with_target
        names = ["TARGET"] + [f"M{j}" for j in range(1, k)]
        return pearson_like(names, r)

    def test_target_first_then_descending(self):
        m = self.make([0.99, 0.985, 0.97])
        out = select_markets(m, MarketId("TARGET"), 0.98)
        assert [x.id for x in out] == ["TARGET", "M1", "M2"]

    def test_strictly_above_threshold(self):
        m = self.make([0.98])
        out = select_markets(m, MarketId("TARGET"), 0.98)
        assert [x.id for x in out] == ["TARGET"]

    def test_tie_broken_by_id(self):
        m = self.make([0.99, 0.99])
        out = select_markets(m, MarketId("TARGET"), 0.98)
        assert [x.id for x in out] == ["TARGET", "M1", "M2"]

    def test_unknown_target(self):
        m = self.make([0.99])
        with pytest.raises(KeyError):
            select_markets(m, MarketId("NOPE"), 0.98)

    @given(st.floats(min_value=0.5, max_value=0.999))
    @settings(max_examples=50)
    def test_lower_threshold_selects_superset(self, thr):
        m = self.make([0.97, 0.92, 0.995, 0.81])
        high = {x.id for x in select_markets(m, MarketId("TARGET"), thr)}
        low = {x.id for x in select_markets(m, MarketId("TARGET"), thr - 0.1)}
        assert high <= low


def pearson_like(names, r):
    from lonjacast.analysis import CorrelationMatrix

    return CorrelationMatrix(markets=tuple(MarketId(x) for x in names), r=np.asarray(r))


class TestAdf:
    def test_stationary_ar1_rejects(self):
        rng = np.random.default_rng(1)
        y = np.zeros(400)
        for t in range(1, 400):
            y[t] = 0.5 * y[t - 1] + rng.normal()
        res = adf_test(y)
        assert "5%" in res.reject_at

    def test_random_walk_fails_to_reject(self):
        rng = np.random.default_rng(2)
        y = np.cumsum(rng.normal(size=400))
        res = adf_test(y)
        assert "5%" not in res.reject_at

    def test_reject_sets_downward_closed(self):
        with pytest.raises(ValueError):
            AdfResult(
                statistic=-3.0,
                lags_used=0,
                reject_at=frozenset({"1%"}),
                critical_values={},
            )
        with pytest.raises(ValueError):
            AdfResult(
                statistic=-3.0,
                lags_used=0,
                reject_at=frozenset({"5%"}),
                critical_values={},
            )

    def test_critical_values_ordered_and_near_asymptotic(self):
        cvs = adf_critical_values(10_000)
        assert cvs["1%"] < cvs["5%"] < cvs["10%"]
        assert cvs["1%"] == pytest.approx(-3.43, abs=0.01)
        assert cvs["5%"] == pytest.approx(-2.86, abs=0.01)
        assert cvs["10%"] == pytest.approx(-2.57, abs=0.01)

    def test_finite_sample_cvs_more_negative(self):
        small = adf_critical_values(50)
        large = adf_critical_values(5000)
        for level in ("1%", "5%", "10%"):
            assert small[level] < large[level]

    def test_lag_selection_bounded(self):
        rng = np.random.default_rng(4)
        y = np.cumsum(rng.normal(size=200))
        res = adf_test(y)
        assert 0 <= res.lags_used <= int(np.floor(12 * (200 / 100) ** 0.25))

    def test_rejects_short_or_constant(self):
        with pytest.raises(ValueError):
            adf_test(np.arange(5.0))
        with pytest.raises(ValueError):
            adf_test(np.ones(100))
