"""Synthetic multi-market weekly price panels with planted lead-lag structure.

The Monday/Tuesday/Wednesday markets track a common latent driver the week it
moves; the Thursday markets (including the default Lleida target) average the
early markets' same-week prices.  Same-week data therefore carries real signal
that two-week-delayed data cannot, which is the structure the evaluation's
public-vs-subscription comparison is designed to detect.
"""

from __future__ import annotations

import datetime as _dt
from decimal import Decimal

import numpy as np

from .core import (
    DEFAULT_CALENDAR,
    IsoWeek,
    MarketId,
    MarketSeries,
    PriceObservation,
    PublicationCalendar,
    Weekday,
    week_add,
)

__all__ = ["generate_series", "generate_csv"]


def generate_series(
    seed: int = 42,
    n_weeks: int = 322,
    start: IsoWeek = IsoWeek(2016, 1),
    calendar: PublicationCalendar = DEFAULT_CALENDAR,
    base_price: float = 1.35,
    driver_innovation: float = 0.02,
    market_noise: float = 0.004,
) -> list[MarketSeries]:
    """Deterministic synthetic panel over the calendar's markets."""
    rng = np.random.default_rng(seed)
    weeks = [start]
    for _ in range(n_weeks - 1):
        weeks.append(week_add(weeks[-1], 1))

    markets = sorted(calendar.weekdays, key=lambda m: (calendar.weekday_of(m), m.id))
    early = [m for m in markets if calendar.weekday_of(m) < Weekday.THU]
    late = [m for m in markets if calendar.weekday_of(m) >= Weekday.THU]

    # mean-reverting latent driver; keeps the series stationary and positive
    z = np.empty(n_weeks)
    z[0] = base_price
    for t in range(1, n_weeks):
        z[t] = base_price + 0.97 * (z[t - 1] - base_price) + rng.normal(0.0, driver_innovation)

    prices: dict[MarketId, np.ndarray] = {}
    for m in early:
        prices[m] = z + rng.normal(0.0, market_noise, size=n_weeks)
    early_mean = np.mean([prices[m] for m in early], axis=0)
    for m in late:
        prices[m] = early_mean + rng.normal(0.0, market_noise, size=n_weeks)

    out = []
    for m in markets:
        wd = calendar.weekday_of(m)
        obs = []
        for w, p in zip(weeks, prices[m]):
            val = Decimal(f"{max(p, 0.05):.4f}")
            obs.append(PriceObservation(market=m, week=w, price=val, decision_weekday=wd))
        out.append(MarketSeries(market=m, observations=tuple(obs)))
    return out


def generate_csv(seed: int = 42, n_weeks: int = 322, start: IsoWeek = IsoWeek(2016, 1)) -> str:
    """The panel as normalized price CSV (date,market,price_eur_kg)."""
    lines = ["date,market,price_eur_kg"]
    rows = []
    for series in generate_series(seed=seed, n_weeks=n_weeks, start=start):
        for o in series.observations:
            date = o.week.monday() + _dt.timedelta(days=int(o.decision_weekday))
            rows.append((date, series.market.id, o.price))
    rows.sort()
    for date, market, price in rows:
        lines.append(f"{date.isoformat()},{market},{price}")
    return "\n".join(lines) + "\n"
