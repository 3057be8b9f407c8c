"""Time- and price-scale summary of a replayed event stream."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from lobkit import analytics
from lobkit.errors import EmptyPlan, InsufficientData, OneSidedBook
from lobkit.events import Event, QuoteRecorder, SnapshotRecorder, TradingCalendar, replay, to_day_time
from lobkit.snapshot import EveryN, OncePerDay, PLANS, schedule

SESSION_WINDOW = (3000.0, 28000.0)
MONTH_DAYS = 21

# published GSK 2002 values, kept as reference columns only
REFERENCE = {
    "mean_spread": 1.9,
    "mean_midquote": 1.4e3,
    "median_width": 68.0,
    "abs_return_1min": 0.9,
    "abs_return_10min": 3.0,
    "abs_return_1day": 23.0,
    "abs_return_1month": 1.4e2,
    "intertrade_time": 10.0,
    "relaxation_half_life": None,
}


@dataclass(frozen=True)
class ScaleRow:
    name: str
    value: Optional[float]
    unit: str
    status: str = "ok"
    detail: str = ""
    target: Optional[tuple] = None
    within: Optional[bool] = None

    @property
    def reference(self):
        return REFERENCE.get(self.name)


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{x:.6g}"


def _row(name, unit, fn) -> ScaleRow:
    try:
        value, detail = fn()
    except (InsufficientData, OneSidedBook) as exc:
        return ScaleRow(name, None, unit, "InsufficientData", str(exc))
    return ScaleRow(name, float(value), unit, "ok", detail)


def _in_window(times, cal, window=SESSION_WINDOW) -> np.ndarray:
    return np.array([window[0] <= to_day_time(t, cal)[1] <= window[1] for t in times], dtype=bool)


def measure_scales(events: Iterable[Event], calendar: TradingCalendar, step: float = 10.0,
                   shock_threshold: float = 5.0, baseline_window: float = 600.0,
                   daily_second: float = 15000.0, month_days: int = MONTH_DAYS,
                   result_hook=None) -> list[ScaleRow]:
    """Replay ``events`` once and return the nine scale rows.

    Quotes are sampled every ``step`` seconds; spread, midquote and intraday
    returns use samples inside the 3000..28000 s part of each day. Daily and
    monthly returns use the midquote at ``daily_second`` of every day. Book
    width averages the 1000-s snapshot grid over the same window.
    """
    def times(plan):
        # a plan that misses every day just leaves its rows without data
        try:
            return schedule(plan, calendar)
        except EmptyPlan:
            return []

    quotes = QuoteRecorder(times(EveryN(step)))
    daily = QuoteRecorder(times(OncePerDay(daily_second)))
    snaps = SnapshotRecorder(times(PLANS["fig3"]))
    result = replay(events, observers=[quotes, daily, snaps])
    if result_hook is not None:
        result_hook(result)

    t, spread = quotes.spread_series()
    _, mid = quotes.midquote_series()
    t = np.asarray(t)
    spread = np.asarray(spread)
    mid = np.asarray(mid)
    inside = _in_window(t, calendar)

    def masked_mean(values):
        v = values[inside & ~np.isnan(values)]
        if not len(v):
            raise InsufficientData("no two-sided samples inside the session window")
        return float(v.mean()), f"{len(v)} samples"

    def width():
        ws = [analytics.median_width(s) for s in snaps.snapshots if s.two_sided]
        if not ws:
            raise InsufficientData("no two-sided snapshots")
        return float(np.mean(ws)), f"{len(ws)} snapshots"

    def ret(horizon, series_t, series_m, window):
        def fn():
            return analytics.mean_abs_return(series_t, series_m, horizon, calendar, window), f"h={horizon:g}s"
        return fn

    dt, dm = daily.midquote_series()

    def daily_ret(lag_days):
        def fn():
            if len(dt) <= lag_days:
                raise InsufficientData(f"need more than {lag_days} days, have {len(dt)}")
            return analytics.mean_abs_return(dt, dm, lag_days * (dt[1] - dt[0]), calendar), f"{lag_days} d"
        return fn

    def intertrade():
        return analytics.mean_intertrade_time(result.executions, calendar, SESSION_WINDOW), \
            f"{len(analytics.trade_times(result.executions))} trades"

    def relaxation():
        shocks = analytics.spread_relaxation(t, spread, shock_threshold, baseline_window, calendar)
        hl = [s.half_life for s in shocks if not s.censored]
        if not hl:
            raise InsufficientData(f"{len(shocks)} shocks, none recovered")
        return float(np.median(hl)), f"median of {len(hl)} ({len(shocks) - len(hl)} censored)"

    return [
        _row("mean_spread", "ticks", lambda: masked_mean(spread)),
        _row("mean_midquote", "ticks", lambda: masked_mean(mid)),
        _row("median_width", "ticks", width),
        _row("abs_return_1min", "ticks", ret(60.0, t, mid, SESSION_WINDOW)),
        _row("abs_return_10min", "ticks", ret(600.0, t, mid, SESSION_WINDOW)),
        _row("abs_return_1day", "ticks", daily_ret(1)),
        _row("abs_return_1month", "ticks", daily_ret(month_days)),
        _row("intertrade_time", "s", intertrade),
        _row("relaxation_half_life", "s", relaxation),
    ]


def format_table(rows: list[ScaleRow]) -> str:
    width = max(len(r.name) for r in rows)
    lines = [f"{'statistic':<{width}}  {'value':>12}  unit   {'reference':>10}  status"]
    for r in rows:
        value = _fmt(r.value) if r.value is not None else "-"
        ref = _fmt(r.reference) if r.reference is not None else "-"
        status = r.status
        if r.within is False:
            status += " (outside target)"
        lines.append(f"{r.name:<{width}}  {value:>12}  {r.unit:<5}  {ref:>10}  {status}")
    return "\n".join(lines) + "\n"


def to_csv(rows: list[ScaleRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["statistic", "value", "unit", "status", "reference", "detail"])
    for r in rows:
        w.writerow([r.name, "" if r.value is None else repr(r.value), r.unit, r.status,
                    "" if r.reference is None else repr(r.reference), r.detail])
    return buf.getvalue()


__all__ = ["ScaleRow", "measure_scales", "format_table", "to_csv", "REFERENCE"]
