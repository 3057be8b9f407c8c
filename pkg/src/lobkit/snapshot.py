"""Sampling plans and price-by-time depth grids."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from lobkit.errors import EmptyPlan, EmptyWindow
from lobkit.events import TradingCalendar, format_time
from lobkit.types import Snapshot

DEFAULT_CAP = 30000
DEFAULT_HALF_WINDOW = 150


@dataclass(frozen=True)
class OncePerDay:
    second: float


@dataclass(frozen=True)
class PerDayList:
    seconds: tuple


@dataclass(frozen=True)
class Periodic:
    """Every ``step`` seconds from ``start`` to ``end`` (inclusive) of each day."""

    start: float
    end: float
    step: float


@dataclass(frozen=True)
class EveryN:
    """Every ``step`` seconds of continuous trading time across the whole span."""

    step: float


SamplingPlan = Union[OncePerDay, PerDayList, Periodic, EveryN]

PLANS = {
    "fig1": OncePerDay(15000),
    "fig2": PerDayList((5000, 10000, 15000, 20000, 25000)),
    "fig3": Periodic(3000, 28000, 1000),
    "fig5": Periodic(3000, 28000, 5000),
    "fig6": EveryN(50),
}


def _per_day_seconds(plan) -> list[float]:
    if isinstance(plan, OncePerDay):
        return [plan.second]
    if isinstance(plan, PerDayList):
        return sorted(set(plan.seconds))
    if plan.step <= 0:
        raise EmptyPlan(f"non-positive step in {plan}")
    n = int((plan.end - plan.start) // plan.step) + 1
    return [plan.start + k * plan.step for k in range(max(n, 0))]


def schedule(plan: SamplingPlan, cal: TradingCalendar) -> list[float]:
    """Expand ``plan`` into absolute times, strictly increasing.

    Per-day seconds that do not exist on a (short) day are skipped for that day.
    """
    if isinstance(plan, str):
        plan = PLANS[plan]
    if isinstance(plan, EveryN):
        if plan.step <= 0:
            raise EmptyPlan(f"non-positive step in {plan}")
        n = int(np.ceil(cal.span / plan.step))
        times = [k * plan.step for k in range(n) if k * plan.step < cal.span]
    else:
        seconds = _per_day_seconds(plan)
        times = [cal.day_start(d) + s
                 for d in range(cal.days)
                 for s in seconds if 0 <= s < cal.length(d)]
    if not times:
        raise EmptyPlan(f"{plan} yields no sampling times")
    return times


@dataclass
class DepthGrid:
    """Signed resting volume per (snapshot, price).

    ``cells`` is positive for bids, negative for asks, zero where empty, clipped
    at ``+-cap``. ``spread`` flags prices strictly between the best bid and ask.
    """

    times: np.ndarray
    prices: np.ndarray
    cells: np.ndarray
    spread: np.ndarray
    cap: int

    def row_strings(self, i: int) -> list[str]:
        return ["S" if s else str(int(c)) for c, s in zip(self.cells[i], self.spread[i])]

    def to_csv(self) -> str:
        lines = ["t," + ",".join(str(int(p)) for p in self.prices)]
        for i, t in enumerate(self.times):
            lines.append(format_time(t) + "," + ",".join(self.row_strings(i)))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "cap": self.cap,
            "prices": [int(p) for p in self.prices],
            "rows": [
                {"t": float(t), "cells": ["S" if s else int(c) for c, s in zip(self.cells[i], self.spread[i])]}
                for i, t in enumerate(self.times)
            ],
        }
        return json.dumps(doc, separators=(",", ":")) + "\n"


def default_window(snapshots: Sequence[Snapshot], half_width: int = DEFAULT_HALF_WINDOW) -> tuple[int, int]:
    """Midquote of the first two-sided snapshot, plus and minus ``half_width``."""
    for s in snapshots:
        if s.two_sided:
            mid = (s.bids[0][0] + s.asks[0][0]) // 2
            return mid - half_width, mid + half_width
    raise EmptyWindow("no two-sided snapshot to centre the price window on")


def grid(snapshots: Sequence[Snapshot], price_window: Optional[tuple[int, int]] = None,
         cap: int = DEFAULT_CAP) -> DepthGrid:
    if not snapshots:
        raise EmptyWindow("no snapshots")
    lo, hi = price_window if price_window is not None else default_window(snapshots)
    if lo > hi:
        raise EmptyWindow(f"empty price window {lo}..{hi}")
    prices = np.arange(lo, hi + 1, dtype=np.int64)
    cells = np.zeros((len(snapshots), len(prices)), dtype=np.int64)
    spread = np.zeros(cells.shape, dtype=bool)
    for i, s in enumerate(snapshots):
        row = cells[i]
        for p, v in s.bids:
            if lo <= p <= hi:
                row[p - lo] = min(v, cap)
        for p, v in s.asks:
            if lo <= p <= hi:
                row[p - lo] = -min(v, cap)
        if s.two_sided:
            a0 = max(s.bids[0][0] + 1, lo)
            a1 = min(s.asks[0][0] - 1, hi)
            if a0 <= a1:
                spread[i, a0 - lo:a1 - lo + 1] = True
    return DepthGrid(np.array([s.t for s in snapshots], dtype=float), prices, cells, spread, cap)
