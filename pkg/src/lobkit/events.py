"""Canonical event files, the trading calendar, and replay.

File format (UTF-8, LF line endings), header ``#lobkit-v1`` then one event
per line::

    t,A,order_id,side,price,volume      add limit order (side B or S)
    t,M,side,volume                     market order
    t,C,order_id,volume|ALL             cancel

``t`` is continuous trading time in seconds and never decreases.
"""

from __future__ import annotations

import heapq
import logging
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Callable, Iterable, Iterator, Optional, Protocol, Sequence, Union

from lobkit.book import Book
from lobkit.errors import (
    EmptyOppositeSide,
    LobkitError,
    MalformedLine,
    OutOfCalendar,
    ReplayError,
    TimeRegression,
    UnknownEventKind,
)
from lobkit.types import Execution, Side, Snapshot

log = logging.getLogger(__name__)

HEADER = "#lobkit-v1"
DAY_LENGTH = 31501
SHORT_DAY_LENGTH = 17101


@dataclass(frozen=True, slots=True)
class AddLimit:
    t: float
    order_id: int
    side: Side
    price: int
    volume: int


@dataclass(frozen=True, slots=True)
class Market:
    t: float
    side: Side
    volume: int


@dataclass(frozen=True, slots=True)
class Cancel:
    t: float
    order_id: int
    volume: Optional[int] = None  # None cancels everything left


Event = Union[AddLimit, Market, Cancel]


def format_time(t: float) -> str:
    t = float(t)
    if t.is_integer():
        return str(int(t))
    return repr(t)


def format_event(ev: Event) -> str:
    ts = format_time(ev.t)
    if isinstance(ev, AddLimit):
        return f"{ts},A,{ev.order_id},{ev.side.code},{ev.price},{ev.volume}"
    if isinstance(ev, Market):
        return f"{ts},M,{ev.side.code},{ev.volume}"
    if isinstance(ev, Cancel):
        vol = "ALL" if ev.volume is None else str(ev.volume)
        return f"{ts},C,{ev.order_id},{vol}"
    raise TypeError(f"not an event: {ev!r}")


def serialize_events(events: Iterable[Event]) -> Iterator[str]:
    """Yield the canonical file line by line, newline included."""
    yield HEADER + "\n"
    for ev in events:
        yield format_event(ev) + "\n"


def write_events(path, events: Iterable[Event]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(serialize_events(events))


def _positive_int(field_text: str, lineno: int, what: str) -> int:
    try:
        value = int(field_text)
    except ValueError:
        raise MalformedLine(lineno, f"{what} {field_text!r} is not an integer") from None
    if value <= 0:
        raise MalformedLine(lineno, f"{what} must be positive, got {value}")
    return value


def _side(field_text: str, lineno: int) -> Side:
    try:
        return Side.from_code(field_text)
    except ValueError:
        raise MalformedLine(lineno, f"side must be B or S, got {field_text!r}") from None


def parse_events(lines: Iterable[str]) -> Iterator[Event]:
    """Parse a canonical event stream lazily, validating as it goes."""
    it = iter(lines)
    first = next(it, None)
    if first is None or first.rstrip("\n") != HEADER:
        raise MalformedLine(1, f"missing {HEADER} header")
    last_t = -math.inf
    for lineno, raw in enumerate(it, start=2):
        line = raw.rstrip("\n")
        parts = line.split(",")
        if len(parts) < 2:
            raise MalformedLine(lineno, f"cannot parse {line!r}")
        try:
            t = float(parts[0])
        except ValueError:
            raise MalformedLine(lineno, f"bad time {parts[0]!r}") from None
        if not math.isfinite(t) or t < 0:
            raise MalformedLine(lineno, f"time must be finite and non-negative, got {parts[0]!r}")
        if t < last_t:
            raise TimeRegression(lineno, f"time {parts[0]} precedes previous event time {format_time(last_t)}")
        last_t = t
        kind = parts[1]
        if kind == "A":
            if len(parts) != 6:
                raise MalformedLine(lineno, "add needs 6 fields")
            order_id = _order_id(parts[2], lineno)
            ev = AddLimit(t, order_id, _side(parts[3], lineno),
                          _positive_int(parts[4], lineno, "price"),
                          _positive_int(parts[5], lineno, "volume"))
        elif kind == "M":
            if len(parts) != 4:
                raise MalformedLine(lineno, "market needs 4 fields")
            ev = Market(t, _side(parts[2], lineno), _positive_int(parts[3], lineno, "volume"))
        elif kind == "C":
            if len(parts) != 4:
                raise MalformedLine(lineno, "cancel needs 4 fields")
            vol = None if parts[3] == "ALL" else _positive_int(parts[3], lineno, "volume")
            ev = Cancel(t, _order_id(parts[2], lineno), vol)
        else:
            raise UnknownEventKind(lineno, f"unknown event kind {kind!r}")
        yield ev


def _order_id(text: str, lineno: int) -> int:
    try:
        value = int(text)
    except ValueError:
        raise MalformedLine(lineno, f"order id {text!r} is not an integer") from None
    if not 0 <= value < 2**63:
        raise MalformedLine(lineno, f"order id {value} outside 0..2^63-1")
    return value


def read_events(path) -> list[Event]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(parse_events(fh))


# --- calendar ---------------------------------------------------------------


@dataclass(frozen=True)
class TradingCalendar:
    """Trading days laid end to end in continuous trading time.

    Day ``i`` starts at the sum of the lengths of days ``0..i-1``.
    """

    days: int
    day_length: float = DAY_LENGTH
    short_days: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.days < 1:
            raise ValueError("calendar needs at least one day")
        lengths = [self.short_days.get(i, self.day_length) for i in range(self.days)]
        starts = [0, *accumulate(lengths)]
        object.__setattr__(self, "_lengths", lengths)
        object.__setattr__(self, "_starts", starts)

    @classmethod
    def lse_2002(cls) -> "TradingCalendar":
        # 252 sessions; Dec 24 and Dec 31 are the 249th and 252nd
        return cls(252, DAY_LENGTH, {248: SHORT_DAY_LENGTH, 251: SHORT_DAY_LENGTH})

    @classmethod
    def covering(cls, t_last: float, day_length: float = DAY_LENGTH) -> "TradingCalendar":
        """Smallest uniform calendar whose span includes ``t_last``."""
        return cls(int(t_last // day_length) + 1, day_length)

    @property
    def span(self) -> float:
        return self._starts[-1]

    def day_start(self, day: int) -> float:
        return self._starts[day]

    def day_end(self, day: int) -> float:
        return self._starts[day + 1]

    def length(self, day: int) -> float:
        return self._lengths[day]

    def day_of(self, t: float) -> int:
        return to_day_time(t, self)[0]


def to_day_time(t: float, cal: TradingCalendar) -> tuple[int, float]:
    if not 0 <= t < cal.span:
        raise OutOfCalendar(f"t={t} outside [0, {cal.span})")
    day = bisect_right(cal._starts, t) - 1
    return day, t - cal._starts[day]


def from_day_time(day: int, second: float, cal: TradingCalendar) -> float:
    if not 0 <= day < cal.days:
        raise OutOfCalendar(f"day {day} outside 0..{cal.days - 1}")
    if not 0 <= second < cal.length(day):
        raise OutOfCalendar(f"second {second} outside day {day} of length {cal.length(day)}")
    return cal._starts[day] + second


# --- replay -------------------------------------------------------------------


class Observer(Protocol):
    times: Sequence[float]

    def observe(self, t: float, book: Book) -> None: ...


class SnapshotRecorder:
    """Takes a full depth snapshot at each scheduled time."""

    def __init__(self, times: Iterable[float]):
        self.times = list(times)
        self.snapshots: list[Snapshot] = []

    def observe(self, t, book):
        self.snapshots.append(book.snapshot(t))


class QuoteRecorder:
    """Records best bid and ask (``None`` when a side is empty)."""

    def __init__(self, times: Iterable[float]):
        self.times = list(times)
        self.quotes: list[tuple[float, Optional[int], Optional[int]]] = []

    def observe(self, t, book):
        self.quotes.append((t, book.best_bid, book.best_ask))

    def spread_series(self):
        return ([t for t, _, _ in self.quotes],
                [math.nan if b is None or a is None else float(a - b) for _, b, a in self.quotes])

    def midquote_series(self):
        return ([t for t, _, _ in self.quotes],
                [math.nan if b is None or a is None else (a + b) / 2 for _, b, a in self.quotes])


@dataclass
class ReplayResult:
    book: Book
    executions: list[Execution]
    no_liquidity: list[int] = field(default_factory=list)
    discarded_volume: int = 0
    n_events: int = 0


EventHook = Callable[[int, Event, list, Book], None]


def apply_event(book: Book, ev: Event, index: int = 0) -> tuple[list[Execution], int]:
    """Apply one event; returns the executions and any discarded market volume."""
    if isinstance(ev, AddLimit):
        return book.add_limit(ev.order_id, ev.side, ev.price, ev.volume, ev.t), 0
    if isinstance(ev, Market):
        try:
            fills = book.add_market(ev.side, ev.volume, ev.t, taker_ref=f"m{index}")
        except EmptyOppositeSide:
            return [], ev.volume
        return fills, ev.volume - sum(f.volume for f in fills)
    if isinstance(ev, Cancel):
        book.cancel(ev.order_id, ev.volume)
        return [], 0
    raise TypeError(f"not an event: {ev!r}")


def replay(events: Iterable[Event], book: Optional[Book] = None,
           observers: Sequence[Observer] = (), hooks: Sequence[EventHook] = ()) -> ReplayResult:
    """Drive ``book`` through ``events``, firing observers at their times.

    An observation scheduled at ``T`` sees every event with ``t <= T``.
    Observers scheduled at the same instant all see the same state.
    """
    book = Book() if book is None else book
    schedule = [(float(t), k, j) for k, obs in enumerate(observers) for j, t in enumerate(obs.times)]
    heapq.heapify(schedule)
    result = ReplayResult(book, [])
    execs = result.executions
    index = -1
    for index, ev in enumerate(events):
        while schedule and schedule[0][0] < ev.t:
            T, k, _ = heapq.heappop(schedule)
            observers[k].observe(T, book)
        try:
            fills, dropped = apply_event(book, ev, index)
        except LobkitError as exc:
            raise ReplayError(index, exc) from exc
        if dropped:
            result.discarded_volume += dropped
            if not fills:
                result.no_liquidity.append(index)
        execs.extend(fills)
        for hook in hooks:
            hook(index, ev, fills, book)
    while schedule:
        T, k, _ = heapq.heappop(schedule)
        observers[k].observe(T, book)
    result.n_events = index + 1
    return result


def write_execution_log(path, executions: Iterable[Execution]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,maker_id,aggressor,price_ticks,volume\n")
        for e in executions:
            fh.write(e.to_csv() + "\n")
