"""Append-only event log with a replayable snapshot.

Every mutation in the service is an event appended to a JSONL file; the
current state is a deterministic fold over the log.  Replaying the log always
reproduces the live snapshot, which makes the store auditable and trivially
recoverable (a truncated final line is dropped with a warning).
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from .core import IsoWeek, MarketId, MarketSeries, PriceObservation, Weekday

__all__ = ["Event", "Snapshot", "EventStore", "replay_events"]


@dataclass(frozen=True)
class Event:
    kind: str  # observation | repair | forecast | settlement | report | cycle
    payload: dict

    def to_line(self) -> str:
        return json.dumps({"kind": self.kind, **self.payload}, sort_keys=True)

    @classmethod
    def from_line(cls, line: str) -> "Event":
        data = json.loads(line)
        kind = data.pop("kind")
        return cls(kind=kind, payload=data)


@dataclass
class Snapshot:
    """Current state derived from the event log."""

    observations: dict[str, dict[str, dict]] = field(default_factory=dict)  # market -> week -> obs
    forecasts: dict[str, dict] = field(default_factory=dict)  # week -> active forecast
    forecast_history: list[dict] = field(default_factory=list)
    settlements: dict[str, dict] = field(default_factory=dict)  # week -> active settlement
    settlement_history: list[dict] = field(default_factory=list)
    repairs: list[dict] = field(default_factory=list)
    last_cycle: dict | None = None
    last_report: dict | None = None
    event_count: int = 0

    def series(self, market: str) -> MarketSeries | None:
        rows = self.observations.get(market)
        if not rows:
            return None
        mid = MarketId(market)
        obs = []
        for week_s in sorted(rows, key=IsoWeek.parse):
            rec = rows[week_s]
            obs.append(
                PriceObservation(
                    market=mid,
                    week=IsoWeek.parse(week_s),
                    price=Decimal(rec["price"]),
                    decision_weekday=Weekday[rec["weekday"]],
                )
            )
        return MarketSeries(market=mid, observations=tuple(obs))

    def markets(self) -> list[str]:
        return sorted(self.observations)

    def latest_forecast(self) -> dict | None:
        if not self.forecasts:
            return None
        week = max(self.forecasts, key=IsoWeek.parse)
        return self.forecasts[week]


def _apply(snap: Snapshot, ev: Event) -> None:
    p = ev.payload
    if ev.kind == "observation":
        snap.observations.setdefault(p["market"], {})[p["week"]] = {
            "price": p["price"],
            "weekday": p["weekday"],
        }
    elif ev.kind == "repair":
        snap.repairs.append(p)
        snap.observations.setdefault(p["market"], {})[p["week"]] = {
            "price": p["replaced_value"],
            "weekday": snap.observations.get(p["market"], {})
            .get(p["week"], {})
            .get("weekday", "THU"),
        }
    elif ev.kind == "forecast":
        snap.forecasts[p["week"]] = p
        snap.forecast_history.append(p)
    elif ev.kind == "settlement":
        snap.settlements[p["week"]] = p
        snap.settlement_history.append(p)
        # the settled price becomes the target market's observation for that
        # week, feeding the next training cycle
        snap.observations.setdefault(p["market"], {})[p["week"]] = {
            "price": p["agreed_price"],
            "weekday": p.get("weekday", "THU"),
        }
    elif ev.kind == "report":
        snap.last_report = p
    elif ev.kind == "cycle":
        snap.last_cycle = p
    else:
        raise ValueError(f"unknown event kind {ev.kind!r}")
    snap.event_count += 1


def replay_events(lines: list[str]) -> Snapshot:
    snap = Snapshot()
    for line in lines:
        _apply(snap, Event.from_line(line))
    return snap


class EventStore:
    """Single-writer JSONL store.  Reads see an immutable snapshot reference;
    writes are serialized through one lock and update the snapshot atomically
    (by swapping the reference)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.warnings: list[str] = []
        self._snapshot = self._load()

    def _load(self) -> Snapshot:
        snap = Snapshot()
        if not self.path.exists():
            return snap
        raw = self.path.read_bytes()
        offset = 0
        good_lines: list[str] = []
        for chunk in raw.split(b"\n"):
            if not chunk.strip():
                offset += len(chunk) + 1
                continue
            try:
                text = chunk.decode("utf-8")
                Event.from_line(text)
            except (UnicodeDecodeError, json.JSONDecodeError, KeyError):
                self.warnings.append(
                    f"corrupt log entry at byte offset {offset}; recovered {len(good_lines)} events"
                )
                # rewrite the recovered prefix so the next append is clean
                self.path.write_text("".join(l + "\n" for l in good_lines), encoding="utf-8")
                break
            good_lines.append(text)
            offset += len(chunk) + 1
        for line in good_lines:
            _apply(snap, Event.from_line(line))
        return snap

    @property
    def snapshot(self) -> Snapshot:
        return self._snapshot

    def append(self, ev: Event) -> None:
        with self._lock:
            with self.path.open("a", encoding="utf-8") as f:
                f.write(ev.to_line() + "\n")
            # fold into a fresh snapshot object so readers never see a partial
            import copy

            snap = copy.deepcopy(self._snapshot)
            _apply(snap, ev)
            self._snapshot = snap

    def append_many(self, events: list[Event]) -> None:
        with self._lock:
            with self.path.open("a", encoding="utf-8") as f:
                for ev in events:
                    f.write(ev.to_line() + "\n")
            import copy

            snap = copy.deepcopy(self._snapshot)
            for ev in events:
                _apply(snap, ev)
            self._snapshot = snap

    def replay(self) -> Snapshot:
        """Re-fold the on-disk log from scratch (audit path)."""
        lines = [
            l for l in self.path.read_text(encoding="utf-8").splitlines() if l.strip()
        ] if self.path.exists() else []
        return replay_events(lines)
