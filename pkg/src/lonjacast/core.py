"""Domain types shared by every stage of the pipeline.

Markets, ISO weeks, price observations, publication calendars and the two
data-availability scenarios.  Everything here is an immutable value object;
instances are safe to share across threads.
"""

from __future__ import annotations

import datetime as _dt
import enum
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Sequence

__all__ = [
    "MarketId",
    "IsoWeek",
    "Weekday",
    "PriceObservation",
    "MarketSeries",
    "PublicationCalendar",
    "LagScenario",
    "PublicDelayed",
    "SubscriptionSameWeek",
    "ValidationReport",
    "validate_series",
    "week_add",
    "week_diff",
    "week_range",
    "DEFAULT_CALENDAR",
]

_MIN_YEAR = 1990
_MAX_YEAR = 2100


class Weekday(enum.IntEnum):
    """Day of week a market fixes its price.  Monday == 0, as in datetime."""

    MON = 0
    TUE = 1
    WED = 2
    THU = 3
    FRI = 4
    SAT = 5
    SUN = 6

    @classmethod
    def from_date(cls, d: _dt.date) -> "Weekday":
        return cls(d.weekday())


@dataclass(frozen=True, order=True)
class MarketId:
    """Stable identifier for one regional market."""

    id: str
    display_name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("market id must be non-empty")
        if not self.display_name:
            object.__setattr__(self, "display_name", self.id)


@dataclass(frozen=True, order=True)
class IsoWeek:
    """ISO-8601 year/week pair, totally ordered across year boundaries."""

    year: int
    week: int

    def __post_init__(self) -> None:
        if not (_MIN_YEAR <= self.year <= _MAX_YEAR):
            raise ValueError(f"year {self.year} outside supported range {_MIN_YEAR}-{_MAX_YEAR}")
        if not 1 <= self.week <= 53:
            raise ValueError(f"week {self.week} outside 1-53")
        # Reject week 53 in 52-week ISO years.
        try:
            _dt.date.fromisocalendar(self.year, self.week, 1)
        except ValueError as exc:
            raise ValueError(f"{self.year}-W{self.week:02d} is not a valid ISO week") from exc

    @classmethod
    def from_date(cls, d: _dt.date) -> "IsoWeek":
        iso = d.isocalendar()
        return cls(iso[0], iso[1])

    @classmethod
    def parse(cls, text: str) -> "IsoWeek":
        """Parse 'YYYY-Www' (e.g. '2016-W01')."""
        parts = text.strip().upper().split("-W")
        if len(parts) != 2:
            raise ValueError(f"malformed week token {text!r}; expected YYYY-Www")
        return cls(int(parts[0]), int(parts[1]))

    def monday(self) -> _dt.date:
        return _dt.date.fromisocalendar(self.year, self.week, 1)

    def __str__(self) -> str:
        return f"{self.year}-W{self.week:02d}"


def week_add(w: IsoWeek, delta: int) -> IsoWeek:
    """Shift a week by ``delta`` weeks (signed), honouring ISO year lengths."""
    d = w.monday() + _dt.timedelta(weeks=delta)
    iso = d.isocalendar()
    if not (_MIN_YEAR <= iso[0] <= _MAX_YEAR):
        raise ValueError(f"week_add({w}, {delta}) leaves the supported year range")
    return IsoWeek(iso[0], iso[1])


def week_diff(a: IsoWeek, b: IsoWeek) -> int:
    """Number of weeks from ``b`` to ``a`` (a - b)."""
    return (a.monday() - b.monday()).days // 7


def week_range(first: IsoWeek, last: IsoWeek) -> list[IsoWeek]:
    """Inclusive contiguous run of weeks from ``first`` to ``last``."""
    n = week_diff(last, first)
    if n < 0:
        raise ValueError(f"week range {first}..{last} is reversed")
    return [week_add(first, k) for k in range(n + 1)]


@dataclass(frozen=True)
class PriceObservation:
    """One weekly price decision for one market, EUR/kg."""

    market: MarketId
    week: IsoWeek
    price: Decimal
    decision_weekday: Weekday

    def __post_init__(self) -> None:
        if not isinstance(self.price, Decimal):
            object.__setattr__(self, "price", Decimal(str(self.price)))


@dataclass(frozen=True)
class MarketSeries:
    """Ordered weekly observations for a single market."""

    market: MarketId
    observations: tuple[PriceObservation, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "observations", tuple(self.observations))

    def __len__(self) -> int:
        return len(self.observations)

    @property
    def weeks(self) -> list[IsoWeek]:
        return [o.week for o in self.observations]

    @property
    def prices(self) -> list[Decimal]:
        return [o.price for o in self.observations]


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_series(series: MarketSeries) -> ValidationReport:
    """Check every MarketSeries invariant; reports all violations, mutates nothing."""
    problems: list[str] = []
    seen: set[IsoWeek] = set()
    prev: IsoWeek | None = None
    for obs in series.observations:
        if obs.market != series.market:
            problems.append(f"observation for {obs.market.id} in series {series.market.id}")
        if obs.price <= 0:
            problems.append(f"non-positive price {obs.price} at {obs.week}")
        if obs.week in seen:
            problems.append(f"duplicate week {obs.week}")
        elif prev is not None and obs.week <= prev:
            problems.append(f"out-of-order week {obs.week} after {prev}")
        seen.add(obs.week)
        prev = obs.week
    return ValidationReport(tuple(problems))


@dataclass(frozen=True)
class PublicationCalendar:
    """Which weekday each market fixes its weekly price on."""

    weekdays: dict[MarketId, Weekday]

    def __post_init__(self) -> None:
        object.__setattr__(self, "weekdays", dict(self.weekdays))

    def weekday_of(self, market: MarketId) -> Weekday:
        try:
            return self.weekdays[market]
        except KeyError:
            raise KeyError(f"market {market.id} missing from publication calendar") from None

    def covers(self, markets: Iterable[MarketId]) -> bool:
        return all(m in self.weekdays for m in markets)


class LagScenario:
    """Data-availability model under which features may be used."""

    name: str


@dataclass(frozen=True)
class PublicDelayed(LagScenario):
    """Ministry-report data: every market's prices arrive ``delay_weeks`` late."""

    delay_weeks: int = 2
    name: str = field(default="public", compare=False)

    def __post_init__(self) -> None:
        if self.delay_weeks < 1:
            raise ValueError("delay_weeks must be >= 1")


@dataclass(frozen=True)
class SubscriptionSameWeek(LagScenario):
    """Subscription data: each market's price is usable the day it is fixed."""

    name: str = field(default="subscription", compare=False)


def _mk(id_: str, name: str) -> MarketId:
    return MarketId(id_, name)


#: Spanish regional markets and their price-decision weekdays.
DEFAULT_CALENDAR = PublicationCalendar(
    {
        _mk("ES-SALAMANCA", "Salamanca"): Weekday.MON,
        _mk("ES-ZARAGOZA", "Zaragoza"): Weekday.MON,
        _mk("ES-PONTEVEDRA", "Pontevedra"): Weekday.TUE,
        _mk("ES-HUESCA", "Huesca"): Weekday.WED,
        _mk("ES-MURCIA", "Murcia"): Weekday.THU,
        _mk("ES-SEGOVIA", "Segovia"): Weekday.THU,
        _mk("ES-LLEIDA", "Lleida"): Weekday.THU,
        _mk("ES-BARCELONA", "Barcelona"): Weekday.THU,
    }
)
