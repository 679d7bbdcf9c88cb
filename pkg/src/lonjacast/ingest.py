"""Parsing, outlier repair and alignment of raw weekly price data.

Input format (bit-exact): UTF-8 CSV with header ``date,market,price_eur_kg``,
ISO calendar dates, ``.`` decimal separator.  Output is a rectangular
multi-market panel over the intersection of the series' week ranges.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import urllib.parse
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from .core import (
    IsoWeek,
    MarketId,
    MarketSeries,
    PriceObservation,
    Weekday,
    validate_series,
    week_add,
    week_diff,
    week_range,
)

__all__ = [
    "PricePanel",
    "RepairLog",
    "RepairEntry",
    "GapFill",
    "IngestError",
    "SourceError",
    "parse_price_csv",
    "serialize_price_csv",
    "repair_outliers",
    "align_panel",
    "fetch_source",
]

CSV_HEADER = "date,market,price_eur_kg"


class IngestError(ValueError):
    """Malformed input data; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SourceError(RuntimeError):
    """A remote or local source could not be read."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class RepairEntry:
    market: MarketId
    week: IsoWeek
    original_value: Decimal
    replaced_value: Decimal
    rule: str = "neighbor-mean"


@dataclass(frozen=True)
class RepairLog:
    entries: tuple[RepairEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def to_ndjson(self) -> str:
        import json

        lines = []
        for e in self.entries:
            lines.append(
                json.dumps(
                    {
                        "market": e.market.id,
                        "week": str(e.week),
                        "original_value": str(e.original_value),
                        "replaced_value": str(e.replaced_value),
                        "rule": e.rule,
                    },
                    sort_keys=True,
                )
            )
        return "\n".join(lines)


@dataclass(frozen=True)
class GapFill:
    market: MarketId
    week: IsoWeek
    filled_value: Decimal


@dataclass(frozen=True)
class PricePanel:
    """Rectangular weeks x markets price matrix with imputation flags."""

    markets: tuple[MarketId, ...]
    weeks: tuple[IsoWeek, ...]
    values: np.ndarray  # float64, shape (len(weeks), len(markets))
    fill_flags: np.ndarray  # bool, same shape

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        f = np.asarray(self.fill_flags, dtype=bool)
        if v.shape != (len(self.weeks), len(self.markets)) or f.shape != v.shape:
            raise ValueError("panel matrices must be weeks x markets")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "fill_flags", f)
        v.setflags(write=False)
        f.setflags(write=False)

    @property
    def n_weeks(self) -> int:
        return len(self.weeks)

    def column(self, market: MarketId) -> np.ndarray:
        return self.values[:, self.market_index(market)]

    def market_index(self, market: MarketId) -> int:
        try:
            return self.markets.index(market)
        except ValueError:
            raise KeyError(f"market {market.id} not in panel") from None

    def week_index(self, week: IsoWeek) -> int:
        idx = week_diff(week, self.weeks[0])
        if not 0 <= idx < len(self.weeks):
            raise KeyError(f"week {week} not in panel")
        return idx


def parse_price_csv(text: str) -> list[MarketSeries]:
    """Parse normalized price CSV into one MarketSeries per market.

    Rows may arrive unsorted; output series are sorted by week.  Raises
    IngestError with the 1-based line number for any malformed row.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("empty input, expected header " + CSV_HEADER) from None
    if [h.strip() for h in header] != CSV_HEADER.split(","):
        raise IngestError(f"bad header {','.join(header)!r}, expected {CSV_HEADER!r}", line=1)

    rows: dict[str, list[PriceObservation]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 3:
            raise IngestError(f"expected 3 fields, got {len(row)}", line=lineno)
        date_s, market_s, price_s = (c.strip() for c in row)
        try:
            date = _dt.date.fromisoformat(date_s)
        except ValueError:
            raise IngestError(f"unparseable date {date_s!r}", line=lineno) from None
        if not market_s:
            raise IngestError("empty market id", line=lineno)
        try:
            price = Decimal(price_s)
        except InvalidOperation:
            raise IngestError(f"non-numeric price {price_s!r}", line=lineno) from None
        market = MarketId(market_s)
        obs = PriceObservation(
            market=market,
            week=IsoWeek.from_date(date),
            price=price,
            decision_weekday=Weekday.from_date(date),
        )
        rows.setdefault(market_s, []).append(obs)

    out: list[MarketSeries] = []
    for market_s in sorted(rows):
        obs = sorted(rows[market_s], key=lambda o: o.week)
        out.append(MarketSeries(market=MarketId(market_s), observations=tuple(obs)))
    return out


def serialize_price_csv(series: list[MarketSeries]) -> str:
    """Inverse of parse_price_csv at 4-decimal precision."""
    lines = [CSV_HEADER]
    for s in series:
        for o in s.observations:
            date = o.week.monday() + _dt.timedelta(days=int(o.decision_weekday))
            lines.append(f"{date.isoformat()},{s.market.id},{o.price:.4f}")
    return "\n".join(lines) + "\n"


def repair_outliers(
    series: MarketSeries, threshold: Decimal | float = Decimal("0.5")
) -> tuple[MarketSeries, RepairLog]:
    """Replace interior spikes by the mean of their temporal neighbours.

    A point is repaired when it deviates from the neighbour mean by more than
    ``threshold`` EUR.  Endpoints are never touched.  Sweeps repeat until no
    interior point is above threshold, so the result is a fixpoint and the
    operation is idempotent.  Termination is guaranteed: every repair lowers
    the series' squared-difference energy by at least 2*threshold^2.
    """
    report = validate_series(series)
    if not report.ok:
        raise ValueError(f"cannot repair invalid series: {report.violations[0]}")
    thr = Decimal(str(threshold))
    prices = list(series.prices)
    entries: list[RepairEntry] = []
    changed = True
    while changed:
        changed = False
        for i in range(1, len(prices) - 1):
            neighbor_mean = (prices[i - 1] + prices[i + 1]) / 2
            if abs(prices[i] - neighbor_mean) > thr:
                entries.append(
                    RepairEntry(
                        market=series.market,
                        week=series.observations[i].week,
                        original_value=prices[i],
                        replaced_value=neighbor_mean,
                    )
                )
                prices[i] = neighbor_mean
                changed = True
    repaired = tuple(
        o
        if o.price == prices[i]
        else PriceObservation(
            market=series.market,
            week=o.week,
            price=prices[i],
            decision_weekday=o.decision_weekday,
        )
        for i, o in enumerate(series.observations)
    )
    return MarketSeries(series.market, repaired), RepairLog(tuple(entries))


def align_panel(series: list[MarketSeries]) -> tuple[PricePanel, list[GapFill]]:
    """Align series on the intersection of their week ranges.

    Missing interior weeks are forward-filled from the previous week and
    flagged.  Raises IngestError when the series share no week range.
    """
    if not series:
        raise IngestError("align_panel needs at least one series")
    for s in series:
        if len(s) == 0:
            raise IngestError(f"series {s.market.id} is empty")
        report = validate_series(s)
        if not report.ok:
            raise IngestError(f"series {s.market.id}: {report.violations[0]}")

    first = max(s.weeks[0] for s in series)
    last = min(s.weeks[-1] for s in series)
    if week_diff(last, first) < 0:
        raise IngestError("series have no overlapping week range")

    weeks = week_range(first, last)
    markets = tuple(s.market for s in series)
    values = np.zeros((len(weeks), len(markets)))
    flags = np.zeros((len(weeks), len(markets)), dtype=bool)
    fills: list[GapFill] = []

    for j, s in enumerate(series):
        by_week = {o.week: o.price for o in s.observations}
        prev: Decimal | None = None
        for i, w in enumerate(weeks):
            price = by_week.get(w)
            if price is None:
                if prev is None:
                    # cannot happen: first is within every series' range and a
                    # missing very first week would move the intersection
                    raise IngestError(f"series {s.market.id} missing leading week {w}")
                price = prev
                flags[i, j] = True
                fills.append(GapFill(market=s.market, week=w, filled_value=price))
            values[i, j] = float(price)
            prev = price
    return PricePanel(markets=markets, weeks=tuple(weeks), values=values, fill_flags=flags), fills


def fetch_source(url: str, timeout: float = 30.0) -> str:
    """Read a source as UTF-8 text.  Local paths and file:// are read directly;
    http(s) URLs are fetched with one retry on transient failure."""
    parsed = urllib.parse.urlparse(url)
    if parsed.scheme in ("", "file"):
        path = Path(parsed.path if parsed.scheme == "file" else url)
        try:
            return path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise SourceError(f"source file not found: {path}") from None
        except UnicodeDecodeError as exc:
            raise SourceError(f"source {path} is not valid UTF-8: {exc}") from None
    if parsed.scheme not in ("http", "https"):
        raise SourceError(f"unsupported source scheme {parsed.scheme!r}")

    import requests

    last_exc: Exception | None = None
    for attempt in range(2):
        try:
            resp = requests.get(url, timeout=timeout)
        except requests.RequestException as exc:
            last_exc = exc
            continue
        if resp.status_code >= 400:
            raise SourceError(f"HTTP {resp.status_code} fetching {url}", status=resp.status_code)
        try:
            resp.encoding = "utf-8"
            return resp.text
        except UnicodeDecodeError as exc:
            raise SourceError(f"response from {url} is not valid UTF-8") from exc
    raise SourceError(f"network failure fetching {url} after 1 retry: {last_exc}")
