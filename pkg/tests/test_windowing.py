import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lonjacast.core import (
    DEFAULT_CALENDAR,
    IsoWeek,
    MarketId,
    PublicDelayed,
    SubscriptionSameWeek,
    week_add,
    week_diff,
)
from lonjacast.ingest import PricePanel
from lonjacast.windowing import (
    AvailabilityOffset,
    availability_offset,
    build_dataset,
    chrono_split,
)

TARGET = MarketId("ES-LLEIDA")


def panel_of(values: np.ndarray, markets=None) -> PricePanel:
    n, k = values.shape
    markets = markets or [m for m in sorted(DEFAULT_CALENDAR.weekdays)][:k]
    weeks = tuple(week_add(IsoWeek(2016, 1), i) for i in range(n))
    return PricePanel(
        markets=tuple(markets),
        weeks=weeks,
        values=values,
        fill_flags=np.zeros_like(values, dtype=bool),
    )


def full_panel(n_weeks: int, seed: int = 0) -> PricePanel:
    markets = sorted(DEFAULT_CALENDAR.weekdays)
    rng = np.random.default_rng(seed)
    values = 1.3 + 0.01 * rng.standard_normal((n_weeks, len(markets))).cumsum(axis=0)
    return panel_of(values, markets)


class TestAvailabilityOffset:
    def test_public_uniform(self):
        for m in DEFAULT_CALENDAR.weekdays:
            off = availability_offset(m, PublicDelayed(2), DEFAULT_CALENDAR, TARGET)
            assert off.offset_weeks == 2

    def test_subscription_earlier_weekday_is_fresh(self):
        sc = SubscriptionSameWeek()
        expected = {
            "ES-SALAMANCA": 0,
            "ES-ZARAGOZA": 0,
            "ES-PONTEVEDRA": 0,
            "ES-HUESCA": 0,
            "ES-MURCIA": 1,  # same weekday as target: previous week only
            "ES-SEGOVIA": 1,
            "ES-BARCELONA": 1,
            "ES-LLEIDA": 1,  # the target's own history
        }
        for mid, off in expected.items():
            got = availability_offset(MarketId(mid), sc, DEFAULT_CALENDAR, TARGET)
            assert got.offset_weeks == off, mid

    def test_monday_target_sees_nothing_fresh(self):
        sc = SubscriptionSameWeek()
        for m in DEFAULT_CALENDAR.weekdays:
            got = availability_offset(m, sc, DEFAULT_CALENDAR, MarketId("ES-SALAMANCA"))
            assert got.offset_weeks == 1

    def test_negative_offset_rejected(self):
        with pytest.raises(ValueError):
            AvailabilityOffset(TARGET, -1)


class TestBuildDataset:
    def test_sample_counts_for_322_week_panel(self):
        panel = full_panel(322)
        pub = build_dataset(panel, TARGET, 2, PublicDelayed(2), DEFAULT_CALENDAR)
        sub = build_dataset(panel, TARGET, 2, SubscriptionSameWeek(), DEFAULT_CALENDAR)
        # T - (max_offset + window - 1): 322 - 3 and 322 - 2
        assert pub.n_samples == 319
        assert sub.n_samples == 320

    def test_feature_values_point_at_lagged_weeks(self):
        panel = full_panel(60)
        ds = build_dataset(panel, TARGET, 3, SubscriptionSameWeek(), DEFAULT_CALENDAR)
        for i in [0, 7, ds.n_samples - 1]:
            t_idx = panel.week_index(ds.target_weeks[i])
            assert ds.targets[i] == panel.values[t_idx, panel.market_index(TARGET)]
            for col, (m, lag) in enumerate(ds.feature_names):
                assert ds.features[i, col] == panel.values[t_idx - lag, panel.market_index(m)]

    def test_lags_respect_scenario_offsets(self):
        panel = full_panel(60)
        ds = build_dataset(panel, TARGET, 2, SubscriptionSameWeek(), DEFAULT_CALENDAR)
        lags = {m.id: [] for m in panel.markets}
        for m, lag in ds.feature_names:
            lags[m.id].append(lag)
        assert lags["ES-SALAMANCA"] == [0, 1]  # fresh same-week value
        assert lags["ES-LLEIDA"] == [1, 2]  # own history starts a week back

    def test_no_leakage_exhaustive_small(self):
        """Every feature week is strictly before the availability cutoff."""
        panel = full_panel(60)
        for scenario in (PublicDelayed(2), SubscriptionSameWeek()):
            for window in range(1, 6):
                ds = build_dataset(panel, TARGET, window, scenario, DEFAULT_CALENDAR)
                for i in range(ds.n_samples):
                    t_idx = panel.week_index(ds.target_weeks[i])
                    for m, lag in ds.feature_names:
                        off = availability_offset(
                            m, scenario, DEFAULT_CALENDAR, TARGET
                        ).offset_weeks
                        assert lag >= off, "feature fresher than the scenario allows"
                        assert t_idx - lag >= 0

    def test_market_subset(self):
        panel = full_panel(60)
        subset = [TARGET, MarketId("ES-HUESCA")]
        ds = build_dataset(panel, TARGET, 2, PublicDelayed(2), DEFAULT_CALENDAR, markets=subset)
        assert ds.features.shape[1] == 4
        assert {m.id for m, _ in ds.feature_names} == {"ES-LLEIDA", "ES-HUESCA"}

    def test_window_too_large(self):
        panel = full_panel(20)
        with pytest.raises(ValueError, match="no samples"):
            build_dataset(panel, TARGET, 20, PublicDelayed(2), DEFAULT_CALENDAR)

    def test_bad_window(self):
        with pytest.raises(ValueError):
            build_dataset(full_panel(30), TARGET, 0, PublicDelayed(2), DEFAULT_CALENDAR)

    def test_to_csv_header(self):
        panel = full_panel(30)
        ds = build_dataset(panel, TARGET, 2, PublicDelayed(2), DEFAULT_CALENDAR)
        header = ds.to_csv().split("\n", 1)[0]
        assert header.startswith("target_week,target,")
        assert "ES-LLEIDA_lag2" in header

    @given(st.integers(min_value=1, max_value=8), st.integers(min_value=40, max_value=90))
    @settings(max_examples=30, deadline=None)
    def test_sample_count_formula(self, window, n_weeks):
        panel = full_panel(n_weeks, seed=window)
        for scenario, max_off in ((PublicDelayed(2), 2), (SubscriptionSameWeek(), 1)):
            ds = build_dataset(panel, TARGET, window, scenario, DEFAULT_CALENDAR)
            assert ds.n_samples == n_weeks - (max_off + window - 1)


class TestChronoSplit:
    def test_split_sizes_and_order(self):
        panel = full_panel(52)
        ds = build_dataset(panel, TARGET, 2, PublicDelayed(2), DEFAULT_CALENDAR)
        train, test = chrono_split(ds, 0.8)
        assert train.n_samples == int(np.floor(ds.n_samples * 0.8))
        assert train.n_samples + test.n_samples == ds.n_samples
        assert max(train.target_weeks) < min(test.target_weeks)

    def test_invalid_fraction(self):
        panel = full_panel(52)
        ds = build_dataset(panel, TARGET, 2, PublicDelayed(2), DEFAULT_CALENDAR)
        for frac in (0.0, 1.0, -0.2):
            with pytest.raises(ValueError):
                chrono_split(ds, frac)
