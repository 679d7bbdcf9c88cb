"""Weekly fetch -> retrain -> forecast cycle and settlement recording."""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

import numpy as np

from .core import (
    DEFAULT_CALENDAR,
    IsoWeek,
    LagScenario,
    MarketId,
    MarketSeries,
    PublicDelayed,
    PublicationCalendar,
    SubscriptionSameWeek,
    Weekday,
    week_add,
)
from .ingest import SourceError, align_panel, fetch_source, parse_price_csv, repair_outliers
from .models.linear import linear_predict, ridge_fit
from .spaces import champion_defaults
from .store import Event, EventStore
from .windowing import availability_offset

__all__ = ["ServiceConfig", "run_weekly_cycle", "record_settlement", "compute_forecast"]

FLAT_BAND = 0.0005  # EUR; below this the forecast direction is Flat


@dataclass(frozen=True)
class ServiceConfig:
    sources: tuple[str, ...]
    target_market: str = "ES-LLEIDA"
    scenario: str = "subscription"  # "public" | "subscription"
    champion: dict = field(default_factory=champion_defaults)
    calendar: dict = field(default_factory=dict)  # market id -> weekday name; empty = default
    listen_addr: str = "127.0.0.1:8787"
    cycle_weekday: str = "WED"
    data_dir: str = "./data"

    @classmethod
    def from_json(cls, text: str) -> "ServiceConfig":
        raw = json.loads(text)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "sources" in raw:
            raw["sources"] = tuple(raw["sources"])
        return cls(**raw)

    @classmethod
    def load(cls, path: str | Path) -> "ServiceConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def scenario_obj(self) -> LagScenario:
        if self.scenario == "public":
            return PublicDelayed(2)
        if self.scenario == "subscription":
            return SubscriptionSameWeek()
        raise ValueError(f"unknown scenario {self.scenario!r}")

    def calendar_obj(self) -> PublicationCalendar:
        if not self.calendar:
            return DEFAULT_CALENDAR
        return PublicationCalendar(
            {MarketId(k): Weekday[v.upper()] for k, v in self.calendar.items()}
        )

    def store_path(self) -> Path:
        return Path(self.data_dir) / "events.jsonl"


def _snapshot_series(store: EventStore) -> list[MarketSeries]:
    snap = store.snapshot
    out = []
    for market in snap.markets():
        s = snap.series(market)
        if s is not None and len(s) > 0:
            out.append(s)
    return out


def _ingest_sources(config: ServiceConfig, store: EventStore) -> tuple[int, bool]:
    """Fetch and append new observations; returns (new_count, stale)."""
    stale = False
    new_events: list[Event] = []
    snap = store.snapshot
    for src in config.sources:
        try:
            text = fetch_source(src)
        except SourceError:
            stale = True
            continue
        for series in parse_price_csv(text):
            repaired, log = repair_outliers(series)
            known = snap.observations.get(series.market.id, {})
            for obs in repaired.observations:
                wk = str(obs.week)
                if wk in known:
                    continue
                new_events.append(
                    Event(
                        "observation",
                        {
                            "market": series.market.id,
                            "week": wk,
                            "price": f"{obs.price:.4f}",
                            "weekday": obs.decision_weekday.name,
                        },
                    )
                )
            for entry in log.entries:
                if str(entry.week) in known:
                    continue
                new_events.append(
                    Event(
                        "repair",
                        {
                            "market": entry.market.id,
                            "week": str(entry.week),
                            "original_value": f"{entry.original_value:.4f}",
                            "replaced_value": f"{entry.replaced_value:.4f}",
                            "rule": entry.rule,
                        },
                    )
                )
    if new_events:
        store.append_many(new_events)
    return len(new_events), stale


def compute_forecast(
    config: ServiceConfig,
    store: EventStore,
    overrides: list[dict] | None = None,
) -> dict:
    """Train the champion on the store's panel and forecast the next decision
    week.  ``overrides`` are (market, week, price) what-if substitutions
    applied to the feature lookup only; nothing is persisted here."""
    series = _snapshot_series(store)
    if not series:
        raise RuntimeError("no observations in store")
    panel, _fills = align_panel(series)
    target = MarketId(config.target_market)
    if target not in panel.markets:
        raise RuntimeError(f"target market {target.id} has no data")
    calendar = config.calendar_obj()
    scenario = config.scenario_obj()
    champ = config.champion
    window = int(champ.get("window", 2))
    alpha = float(champ.get("alpha", 0.010034555))

    from .windowing import build_dataset

    ds = build_dataset(panel, target, window, scenario, calendar)
    model = ridge_fit(ds.features, ds.targets, alpha)

    override_map: dict[tuple[str, str], float] = {}
    for ov in overrides or []:
        if ov["market"] not in [m.id for m in panel.markets]:
            raise KeyError(f"unknown market {ov['market']}")
        price = float(ov["price"])
        if price <= 0:
            raise ValueError(f"override price must be positive, got {price}")
        override_map[(ov["market"], str(IsoWeek.parse(ov["week"])))] = price

    last_week = panel.weeks[-1]
    next_week = week_add(last_week, 1)
    feats = []
    fresh = True
    for market, lag in ds.feature_names:
        wanted = week_add(next_week, -lag)
        key = (market.id, str(wanted))
        if key in override_map:
            feats.append(override_map[key])
            continue
        try:
            idx = panel.week_index(wanted)
            feats.append(float(panel.values[idx, panel.market_index(market)]))
        except KeyError:
            # value not yet published: fall back to the market's latest price
            feats.append(float(panel.values[-1, panel.market_index(market)]))
            fresh = False
    pred = float(linear_predict(model, np.array(feats).reshape(1, -1))[0])

    last_price = float(panel.values[-1, panel.market_index(target)])
    delta = pred - last_price
    direction = "Flat" if abs(delta) < FLAT_BAND else ("Up" if delta > 0 else "Down")
    fingerprint = f"ridge:a={alpha:g}:w={window}:{scenario.name}"
    return {
        "market": target.id,
        "week": str(next_week),
        "predicted_price": round(pred, 4),
        "direction": direction,
        "model_fingerprint": fingerprint,
        "last_observed": round(last_price, 4),
        "features_fresh": fresh,
        "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }


def run_weekly_cycle(config: ServiceConfig, store: EventStore) -> dict:
    """One fetch -> repair -> retrain -> forecast pass.  Idempotent within a
    week: re-running replaces that week's active forecast."""
    new_count, stale = _ingest_sources(config, store)
    summary: dict = {"new_observations": new_count, "stale": stale}
    snap = store.snapshot
    existing = snap.latest_forecast()
    # a settlement recorded after the active forecast changes the training
    # input, so it must defeat the no-op shortcut and trigger a retrain
    last_settled = max((s["entered_at"] for s in snap.settlements.values()), default=None)
    settled_since = (
        existing is not None
        and last_settled is not None
        and last_settled > existing["created_at"]
    )
    if new_count == 0 and existing is not None and not stale and not settled_since:
        summary["status"] = "no-op: 0 new observations"
        summary["forecast_week"] = existing["week"] if existing else None
        store.append(Event("cycle", {"summary": summary, "at": _now()}))
        return summary
    try:
        forecast = compute_forecast(config, store)
    except Exception as exc:
        summary["status"] = f"forecast withheld: {exc}"
        store.append(Event("cycle", {"summary": summary, "at": _now()}))
        return summary
    store.append(Event("forecast", forecast))
    summary["status"] = "ok" if not stale else "ok (stale sources)"
    summary["forecast_week"] = forecast["week"]
    summary["predicted_price"] = forecast["predicted_price"]
    summary["direction"] = forecast["direction"]
    store.append(Event("cycle", {"summary": summary, "at": _now()}))
    return summary


def record_settlement(
    config: ServiceConfig, store: EventStore, week: str, agreed_price: float, entered_by: str
) -> dict:
    """Append the agreed reference price; it becomes the target market's
    observation for that week, closing the training feedback loop."""
    price = Decimal(str(agreed_price))
    if price <= 0:
        raise ValueError(f"agreed price must be positive, got {agreed_price}")
    wk = IsoWeek.parse(week)  # validates
    latest = store.snapshot.latest_forecast()
    if latest is not None:
        horizon = IsoWeek.parse(latest["week"])
        if wk > horizon:
            raise ValueError(f"cannot settle {wk}, beyond current forecast week {horizon}")
    calendar = config.calendar_obj()
    target = MarketId(config.target_market)
    weekday = calendar.weekday_of(target).name if calendar.covers([target]) else "THU"
    payload = {
        "market": config.target_market,
        "week": str(wk),
        "agreed_price": f"{price:.4f}",
        "entered_by": entered_by,
        "entered_at": _now(),
        "weekday": weekday,
    }
    store.append(Event("settlement", payload))
    return payload


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()
