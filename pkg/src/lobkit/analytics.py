"""Order book statistics across time scales.

All functions are pure: they read snapshots or sampled series and never
touch a live book.
"""

from __future__ import annotations

import enum
import logging
import math
from bisect import bisect_left, insort
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from lobkit.errors import (
    EmptyBook,
    InconsistentPair,
    InsufficientData,
    OneSidedBook,
)
from lobkit.events import AddLimit, Cancel, Event, Market, TradingCalendar, to_day_time
from lobkit.types import Execution, Side, Snapshot

log = logging.getLogger(__name__)

__all__ = [
    "Snapshot", "ImbalancePoint", "ShapeProfile", "QuoteChange", "Shock",
    "total_volumes", "imbalance", "median_width", "accumulate_shape",
    "mean_abs_return", "trade_times", "mean_intertrade_time",
    "classify_quote_change", "spread_relaxation", "stripe_autocorrelation",
]


def total_volumes(s: Snapshot) -> tuple[int, int]:
    return sum(v for _, v in s.bids), sum(v for _, v in s.asks)


@dataclass(frozen=True)
class ImbalancePoint:
    t: float
    v_buy: int
    v_sell: int
    i_buy: float
    i_sell: float


def imbalance(s: Snapshot) -> ImbalancePoint:
    """Buy and sell imbalance of the resting volume.

    ``i_buy = V_buy / (V_buy + V_sell)`` and ``i_sell = -V_sell / (V_buy + V_sell)``,
    so ``i_buy - i_sell`` equals 1 up to rounding. Integer true division is
    correctly rounded, which makes both values exactly invariant under
    scaling all volumes by a common factor.
    """
    vb, vs = total_volumes(s)
    total = vb + vs
    if total == 0:
        raise EmptyBook("imbalance of an empty book")
    i_buy = vb / total
    i_sell = -(vs / total)
    return ImbalancePoint(s.t, vb, vs, i_buy, i_sell)


def _side_median(levels) -> int:
    total = sum(v for _, v in levels)
    cum = 0
    for p, v in levels:
        cum += v
        if 2 * cum >= total:
            return p
    raise AssertionError("unreachable: cumulative volume never reached half")


def median_width(s: Snapshot, method: str = "per_side") -> int:
    """Width of the book in ticks.

    ``per_side`` (default): distance between the bid-side and ask-side
    volume medians, each found by accumulating away from the spread.
    ``symmetric``: width of the narrowest interval centred on the midquote
    that holds at least half of all resting volume.
    """
    if not s.two_sided:
        raise OneSidedBook("median width needs both sides")
    if method == "per_side":
        return _side_median(s.asks) - _side_median(s.bids)
    if method == "symmetric":
        m2 = s.bids[0][0] + s.asks[0][0]
        dist = sorted((abs(2 * p - m2), v) for p, v in (*s.bids, *s.asks))
        total = sum(v for _, v in dist)
        cum = 0
        for d2, v in dist:
            cum += v
            if 2 * cum >= total:
                # half-width in half ticks == full width in ticks
                return d2
    raise ValueError(f"unknown width method {method!r}")


@dataclass
class ShapeProfile:
    """Snapshot-averaged depth against normalized price ``price / midquote - 1``.

    Bin ``k`` covers ``[k / bins_per_unit, (k + 1) / bins_per_unit)``; binning
    is done in exact integer arithmetic.
    """

    bins_per_unit: int = 2000
    sums: dict = field(default_factory=lambda: {Side.BUY: defaultdict(int), Side.SELL: defaultdict(int)})
    count: int = 0
    skipped: int = 0

    @property
    def bin_width(self) -> float:
        return 1.0 / self.bins_per_unit

    def bin_of(self, price: int, m2: int) -> int:
        # price / (m2 / 2) - 1 == (2 * price - m2) / m2
        return ((2 * price - m2) * self.bins_per_unit) // m2

    def bin_center(self, k: int) -> float:
        return (k + 0.5) / self.bins_per_unit

    def mean(self, side: Side) -> dict[int, float]:
        if self.count == 0:
            return {}
        return {k: v / self.count for k, v in sorted(self.sums[side].items())}

    def merge(self, other: "ShapeProfile") -> "ShapeProfile":
        if other.bins_per_unit != self.bins_per_unit:
            raise ValueError("cannot merge profiles with different binning")
        out = ShapeProfile(self.bins_per_unit)
        for prof in (self, other):
            for side in Side:
                for k, v in prof.sums[side].items():
                    out.sums[side][k] += v
        out.count = self.count + other.count
        out.skipped = self.skipped + other.skipped
        return out

    def rows(self):
        """``(bin_center, side, mean_volume, count)`` rows, bids then asks."""
        for side in Side:
            for k, mean in self.mean(side).items():
                yield self.bin_center(k), side.code, mean, self.count

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("bin_center,side,mean_volume,count\n")
            for center, side, mean, count in self.rows():
                fh.write(f"{center!r},{side},{mean!r},{count}\n")


def accumulate_shape(profile: ShapeProfile, s: Snapshot) -> ShapeProfile:
    """Add one snapshot to ``profile`` (in place) and return it.

    One-sided snapshots have no midquote; they are skipped and counted in
    ``profile.skipped``.
    """
    if not s.two_sided:
        log.info("shape: skipping one-sided snapshot at t=%s", s.t)
        profile.skipped += 1
        return profile
    m2 = s.bids[0][0] + s.asks[0][0]
    for side, levels in ((Side.BUY, s.bids), (Side.SELL, s.asks)):
        sums = profile.sums[side]
        for p, v in levels:
            sums[profile.bin_of(p, m2)] += v
    profile.count += 1
    return profile


def _intraday(horizon: float, cal: Optional[TradingCalendar]) -> bool:
    if cal is None:
        return False
    return horizon < min(cal.length(d) for d in range(cal.days))


def mean_abs_return(times: Sequence[float], values: Sequence[float], horizon: float,
                    calendar: Optional[TradingCalendar] = None,
                    window: Optional[tuple[float, float]] = None,
                    rtol: float = 1e-9) -> float:
    """Mean of ``|m(t + horizon) - m(t)|`` over a uniformly sampled series.

    With a calendar, horizons shorter than a trading day skip pairs whose
    endpoints fall on different days, and ``window`` (seconds of day, both
    ends inclusive) restricts both endpoints to that part of the session.
    NaN samples (one-sided book) are skipped.
    """
    t = np.asarray(times, dtype=float)
    m = np.asarray(values, dtype=float)
    if t.shape != m.shape or t.ndim != 1:
        raise ValueError("times and values must be 1-d and the same length")
    if len(t) < 2:
        raise InsufficientData("need at least two samples")
    steps = np.diff(t)
    step = steps[0]
    if step <= 0 or not np.allclose(steps, step, rtol=rtol, atol=0):
        raise ValueError("series must be sampled on a uniform grid")
    lag_f = horizon / step
    lag = int(round(lag_f))
    if lag < 1 or abs(lag_f - lag) > 1e-6 * max(1.0, lag_f):
        raise ValueError(f"horizon {horizon} is not a multiple of the grid step {step}")
    if lag >= len(t):
        raise InsufficientData(f"series spans {t[-1] - t[0]} s, shorter than horizon {horizon} s")
    diff = m[lag:] - m[:-lag]
    ok = ~np.isnan(diff)
    if calendar is not None and (window is not None or _intraday(horizon, calendar)):
        day = np.empty(len(t), dtype=np.int64)
        sec = np.empty(len(t))
        for i, ti in enumerate(t):
            day[i], sec[i] = to_day_time(ti, calendar)
        if _intraday(horizon, calendar):
            ok &= day[lag:] == day[:-lag]
        if window is not None:
            inside = (sec >= window[0]) & (sec <= window[1])
            ok &= inside[lag:] & inside[:-lag]
    if not ok.any():
        raise InsufficientData(f"no valid pairs at horizon {horizon} s")
    return float(np.abs(diff[ok]).mean())


def trade_times(executions: Iterable[Execution]) -> list[float]:
    """One timestamp per aggressor event (fills sharing a taker collapse)."""
    out = []
    prev = None
    for e in executions:
        key = (e.time, e.taker_ref, e.aggressor)
        if key != prev:
            out.append(e.time)
            prev = key
    return out


def mean_intertrade_time(executions: Iterable[Execution], calendar: TradingCalendar,
                         window: tuple[float, float] = (3000, 28000)) -> float:
    """Mean gap between successive trades inside each day's window, pooled."""
    by_day = defaultdict(list)
    for t in trade_times(executions):
        day, sec = to_day_time(t, calendar)
        if window[0] <= sec <= window[1]:
            by_day[day].append(t)
    gaps = []
    for day in sorted(by_day):
        ts = by_day[day]
        gaps.extend(b - a for a, b in zip(ts, ts[1:]))
    if not gaps:
        raise InsufficientData("fewer than two trades inside any day's window")
    return math.fsum(gaps) / len(gaps)


# --- quote changes ------------------------------------------------------------


class QuoteChange(enum.Enum):
    MARKET_REMOVAL = "MarketRemoval"
    INSIDE_SPREAD_PLACEMENT = "InsideSpreadPlacement"
    BEST_LEVEL_CANCEL = "BestLevelCancel"
    NO_CHANGE = "NoChange"


def _match_depth(opp: dict, side: Side, volume: int, limit: Optional[int]) -> int:
    """Consume aggregated opposite depth in price priority; returns the remainder."""
    prices = sorted(opp, reverse=(side is Side.SELL))
    for p in prices:
        if volume == 0:
            break
        if limit is not None and (p > limit if side is Side.BUY else p < limit):
            break
        take = min(volume, opp[p])
        opp[p] -= take
        volume -= take
        if opp[p] == 0:
            del opp[p]
    return volume


def _expected_post(pre: Snapshot, event: Event, post: Snapshot) -> tuple[dict, dict]:
    bids, asks = dict(pre.bid_depth), dict(pre.ask_depth)
    if isinstance(event, AddLimit):
        own, opp = (bids, asks) if event.side is Side.BUY else (asks, bids)
        rest = _match_depth(opp, event.side, event.volume, event.price)
        if rest:
            own[event.price] = own.get(event.price, 0) + rest
    elif isinstance(event, Market):
        opp = asks if event.side is Side.BUY else bids
        _match_depth(opp, event.side, event.volume, None)
    elif isinstance(event, Cancel):
        # a cancel only names the order; find the one level that shrank
        changed = [(side, p) for side, pre_d, post_d in ((Side.BUY, bids, post.bid_depth),
                                                        (Side.SELL, asks, post.ask_depth))
                   for p in set(pre_d) | set(post_d) if pre_d.get(p, 0) != post_d.get(p, 0)]
        if len(changed) != 1:
            raise InconsistentPair(f"cancel must change exactly one level, changed {changed}")
        side, p = changed[0]
        d = bids if side is Side.BUY else asks
        new = (post.bid_depth if side is Side.BUY else post.ask_depth).get(p, 0)
        removed = d[p] - new if p in d else -1
        if removed <= 0 or (event.volume is not None and removed != event.volume):
            raise InconsistentPair(f"level {p} did not shrink by the cancelled volume")
        if new:
            d[p] = new
        else:
            del d[p]
    else:
        raise TypeError(f"not an event: {event!r}")
    return bids, asks


def classify_quote_change(pre: Snapshot, event: Event, post: Snapshot, side: Side) -> QuoteChange:
    """Label how ``event`` changed the ``side`` quote (bid for BUY, ask for SELL).

    ``MARKET_REMOVAL``: a trade emptied the whole best level on ``side``.
    ``INSIDE_SPREAD_PLACEMENT``: a ``side`` limit order came to rest strictly
    between the old best bid and ask (an absent quote counts as unbounded).
    ``BEST_LEVEL_CANCEL``: a cancellation emptied the best level on ``side``.
    Raises :class:`InconsistentPair` if ``post`` cannot follow from ``pre``.
    """
    bids, asks = _expected_post(pre, event, post)
    if bids != post.bid_depth or asks != post.ask_depth:
        raise InconsistentPair(f"post-event depth at t={post.t} does not follow from the event")
    side = Side(side)
    pre_levels = pre.bids if side is Side.BUY else pre.asks
    post_depth = post.bid_depth if side is Side.BUY else post.ask_depth
    best_before = pre_levels[0][0] if pre_levels else None
    emptied = best_before is not None and best_before not in post_depth

    if isinstance(event, Market) or (isinstance(event, AddLimit) and event.side is not side):
        traded = isinstance(event, Market) or (
            best_before is not None
            and (event.price <= best_before if side is Side.BUY else event.price >= best_before))
        if traded and emptied and event.side is side.opposite:
            return QuoteChange.MARKET_REMOVAL
        return QuoteChange.NO_CHANGE
    if isinstance(event, AddLimit):
        b = pre.best_bid if pre.best_bid is not None else -math.inf
        a = pre.best_ask if pre.best_ask is not None else math.inf
        rested = post_depth.get(event.price, 0) > (pre.bid_depth if side is Side.BUY else pre.ask_depth).get(event.price, 0)
        if b < event.price < a and rested:
            return QuoteChange.INSIDE_SPREAD_PLACEMENT
        return QuoteChange.NO_CHANGE
    # cancel
    if emptied:
        return QuoteChange.BEST_LEVEL_CANCEL
    return QuoteChange.NO_CHANGE


# --- spread relaxation --------------------------------------------------------


@dataclass(frozen=True)
class Shock:
    shock_time: float
    peak_excess: float
    half_life: Optional[float]
    censored: bool
    baseline: float = math.nan

    def to_record(self) -> dict:
        return {
            "shock_time": self.shock_time,
            "peak_excess": self.peak_excess,
            "half_life": self.half_life,
            "censored": self.censored,
        }


class _RollingMedian:
    def __init__(self):
        self._sorted: list[float] = []

    def add(self, x):
        insort(self._sorted, x)

    def remove(self, x):
        del self._sorted[bisect_left(self._sorted, x)]

    def __len__(self):
        return len(self._sorted)

    def median(self):
        s = self._sorted
        n = len(s)
        mid = n // 2
        return s[mid] if n % 2 else (s[mid - 1] + s[mid]) / 2


def spread_relaxation(times: Sequence[float], spreads: Sequence[float],
                      shock_threshold: float = 5.0, baseline_window: float = 600.0,
                      calendar: Optional[TradingCalendar] = None) -> list[Shock]:
    """Find abrupt spread widenings and how fast they decay.

    The baseline at each sample is the median spread over the preceding
    ``baseline_window`` seconds (same trading day only, current sample
    excluded). A shock starts when the spread exceeds the baseline by at
    least ``shock_threshold``; the baseline is then frozen. The excess keeps
    a running peak, and the half-life is the time from the peak to the first
    sample whose excess is at most half of it. A fresh jump of
    ``shock_threshold`` above the running peak level while a shock is still
    open starts a new shock and censors the open one, as does a day end or
    the end of the series. After a recovery the detector re-arms only once
    the excess over the rolling baseline drops below the threshold again.
    NaN samples are ignored.
    """
    t = np.asarray(times, dtype=float)
    s = np.asarray(spreads, dtype=float)
    out: list[Shock] = []
    window = _RollingMedian()
    lo = 0  # first sample still inside the rolling window
    day_prev = None
    state = "armed"
    start = peak = t_peak = base = None

    def close_censored():
        out.append(Shock(float(t[start]), float(peak), None, True, float(base)))

    for i in range(len(t)):
        ti, si = t[i], s[i]
        day = to_day_time(ti, calendar)[0] if calendar is not None else 0
        if day != day_prev:
            if state == "open":
                close_censored()
            state = "armed"
            window = _RollingMedian()
            lo = i
            day_prev = day
        while lo < i and t[lo] < ti - baseline_window:
            if not math.isnan(s[lo]):
                window.remove(s[lo])
            lo += 1
        if not math.isnan(si):
            baseline = window.median() if len(window) else None
            if state == "open":
                excess = si - base
                if si - (base + peak) >= shock_threshold and baseline is not None:
                    close_censored()
                    start, base, peak, t_peak = i, baseline, si - baseline, ti
                elif excess > peak:
                    peak, t_peak = excess, ti
                elif excess <= 0.5 * peak:
                    out.append(Shock(float(t[start]), float(peak), float(ti - t_peak), False, float(base)))
                    state = "rearm"
            elif baseline is not None:
                if state == "rearm" and si - baseline < shock_threshold:
                    state = "armed"
                if state == "armed" and si - baseline >= shock_threshold:
                    state = "open"
                    start, base, peak, t_peak = i, baseline, si - baseline, ti
            window.add(si)
    if state == "open":
        close_censored()
    return out


def stripe_autocorrelation(depth: dict[int, float], max_lag: int = 10) -> np.ndarray:
    """Autocorrelation of a depth profile along a fixed absolute price axis.

    ``depth`` maps price to (time-averaged) volume; missing prices count as
    zero. Returns the coefficients for lags ``0..max_lag``.
    """
    if not depth:
        raise InsufficientData("empty depth profile")
    lo, hi = min(depth), max(depth)
    x = np.zeros(hi - lo + 1)
    for p, v in depth.items():
        x[p - lo] = v
    x = x - x.mean()
    denom = float(np.dot(x, x))
    if denom == 0:
        raise InsufficientData("flat depth profile")
    return np.array([np.dot(x[: len(x) - k], x[k:]) / denom if k < len(x) else 0.0
                     for k in range(max_lag + 1)])
