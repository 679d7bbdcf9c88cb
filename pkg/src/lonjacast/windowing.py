"""Leakage-safe supervised datasets from the aligned panel.

Each sample predicts the target market's week-t price from the most recent
weekly values of every panel market that are actually available at the
target's decision moment under the active lag scenario.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    IsoWeek,
    LagScenario,
    MarketId,
    PublicDelayed,
    PublicationCalendar,
    SubscriptionSameWeek,
)
from .ingest import PricePanel

__all__ = [
    "AvailabilityOffset",
    "SupervisedDataset",
    "availability_offset",
    "build_dataset",
    "chrono_split",
]


@dataclass(frozen=True)
class AvailabilityOffset:
    """How many weeks behind the target's decision week a market's freshest
    usable value sits."""

    market: MarketId
    offset_weeks: int

    def __post_init__(self) -> None:
        if self.offset_weeks < 0:
            raise ValueError("offset must be >= 0")


@dataclass(frozen=True)
class SupervisedDataset:
    features: np.ndarray  # (n_samples, n_markets * window)
    targets: np.ndarray  # (n_samples,)
    target_weeks: tuple[IsoWeek, ...]
    feature_names: tuple[tuple[MarketId, int], ...]  # (market, lag in weeks behind target week)
    scenario: LagScenario
    window: int

    def __post_init__(self) -> None:
        f = np.asarray(self.features, dtype=float)
        t = np.asarray(self.targets, dtype=float)
        if f.shape != (len(self.target_weeks), len(self.feature_names)):
            raise ValueError("feature matrix shape mismatch")
        if t.shape != (len(self.target_weeks),):
            raise ValueError("target vector shape mismatch")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "targets", t)
        f.setflags(write=False)
        t.setflags(write=False)

    @property
    def n_samples(self) -> int:
        return len(self.target_weeks)

    def to_csv(self) -> str:
        cols = [f"{m.id}_lag{k}" for m, k in self.feature_names]
        lines = ["target_week,target," + ",".join(cols)]
        for i, w in enumerate(self.target_weeks):
            feats = ",".join(f"{v:.6f}" for v in self.features[i])
            lines.append(f"{w},{self.targets[i]:.6f},{feats}")
        return "\n".join(lines) + "\n"


def availability_offset(
    market: MarketId,
    scenario: LagScenario,
    calendar: PublicationCalendar,
    target: MarketId,
) -> AvailabilityOffset:
    """Freshest usable lag for one feature market relative to the target.

    Public data: every market is ``delay_weeks`` behind.  Subscription data:
    markets publishing strictly earlier in the week than the target already
    have their current-week price on the table (offset 0); the rest, including
    the target itself, contribute last week's value (offset 1).
    """
    if isinstance(scenario, PublicDelayed):
        return AvailabilityOffset(market, scenario.delay_weeks)
    if isinstance(scenario, SubscriptionSameWeek):
        m_day = calendar.weekday_of(market)
        t_day = calendar.weekday_of(target)
        return AvailabilityOffset(market, 0 if m_day < t_day else 1)
    raise TypeError(f"unknown scenario {scenario!r}")


def build_dataset(
    panel: PricePanel,
    target: MarketId,
    window: int,
    scenario: LagScenario,
    calendar: PublicationCalendar,
    markets: list[MarketId] | None = None,
) -> SupervisedDataset:
    """One sample per week whose full lag window exists in the panel.

    Feature (m, lag k) for a sample with target week t is the panel value at
    week t - offset(m) - k, k in 0..window-1.  Deterministic and order-stable.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    use_markets = list(markets) if markets is not None else list(panel.markets)
    offsets = {
        m: availability_offset(m, scenario, calendar, target).offset_weeks for m in use_markets
    }
    max_offset = max(offsets.values())
    T = panel.n_weeks
    start = max_offset + window - 1
    if start >= T:
        raise ValueError(
            f"window {window} with max offset {max_offset} leaves no samples in a {T}-week panel"
        )

    tcol = panel.market_index(target)
    names: list[tuple[MarketId, int]] = []
    cols: list[np.ndarray] = []
    for m in use_markets:
        mcol = panel.market_index(m)
        for k in range(window):
            lag = offsets[m] + k
            names.append((m, lag))
            cols.append(panel.values[start - lag : T - lag, mcol])
    features = np.column_stack(cols)
    targets = panel.values[start:T, tcol]
    target_weeks = panel.weeks[start:T]
    return SupervisedDataset(
        features=features,
        targets=targets.copy(),
        target_weeks=tuple(target_weeks),
        feature_names=tuple(names),
        scenario=scenario,
        window=window,
    )


def chrono_split(
    ds: SupervisedDataset, train_fraction: float = 0.8
) -> tuple[SupervisedDataset, SupervisedDataset]:
    """Older samples train, newest test; split at floor(n * fraction)."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    n = ds.n_samples
    cut = int(np.floor(n * train_fraction))
    if cut < 1 or cut >= n:
        raise ValueError(f"{n} samples cannot give a non-empty {train_fraction:.0%} split")
    return _slice(ds, 0, cut), _slice(ds, cut, n)


def _slice(ds: SupervisedDataset, lo: int, hi: int) -> SupervisedDataset:
    return SupervisedDataset(
        features=ds.features[lo:hi].copy(),
        targets=ds.targets[lo:hi].copy(),
        target_weeks=ds.target_weeks[lo:hi],
        feature_names=ds.feature_names,
        scenario=ds.scenario,
        window=ds.window,
    )
