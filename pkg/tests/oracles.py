"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here shares code with the package beyond the plain data types.
"""

from __future__ import annotations

import math
from fractions import Fraction

from lobkit.events import AddLimit, Cancel, Market
from lobkit.types import Side


class BruteMatcher:
    """Keeps every resting order in one flat list and rescans it for each fill."""

    def __init__(self):
        self.orders = []  # dicts: id, side, price, volume, seq
        self.seq = 0

    def _find(self, order_id):
        for o in self.orders:
            if o["id"] == order_id:
                return o
        return None

    def _match(self, t, side, volume, limit, log):
        while volume > 0:
            if side is Side.BUY:
                cands = [o for o in self.orders if o["side"] is Side.SELL
                         and (limit is None or o["price"] <= limit)]
                key = lambda o: (o["price"], o["seq"])
            else:
                cands = [o for o in self.orders if o["side"] is Side.BUY
                         and (limit is None or o["price"] >= limit)]
                key = lambda o: (-o["price"], o["seq"])
            if not cands:
                break
            maker = min(cands, key=key)
            q = min(volume, maker["volume"])
            log.append((t, maker["id"], side.code, maker["price"], q))
            maker["volume"] -= q
            volume -= q
            if maker["volume"] == 0:
                self.orders.remove(maker)
        return volume

    def apply(self, ev):
        """Returns ``(executions, error_name)``; the state is untouched on error."""
        log = []
        if isinstance(ev, AddLimit):
            if self._find(ev.order_id) is not None:
                return [], "DuplicateOrderId"
            rest = self._match(ev.t, ev.side, ev.volume, ev.price, log)
            if rest:
                self.orders.append(dict(id=ev.order_id, side=ev.side, price=ev.price,
                                        volume=rest, seq=self.seq))
            self.seq += 1
            return log, None
        if isinstance(ev, Market):
            if not any(o["side"] is not ev.side for o in self.orders):
                return [], "EmptyOppositeSide"
            self._match(ev.t, ev.side, ev.volume, None, log)
            return log, None
        o = self._find(ev.order_id)
        if o is None:
            return [], "UnknownOrderId"
        if ev.volume is not None and ev.volume > o["volume"]:
            return [], "CancelExceedsVolume"
        if ev.volume is None or ev.volume == o["volume"]:
            self.orders.remove(o)
        else:
            o["volume"] -= ev.volume
        return [], None

    def depth(self, side):
        agg = {}
        for o in self.orders:
            if o["side"] is side:
                agg[o["price"]] = agg.get(o["price"], 0) + o["volume"]
        return sorted(agg.items(), reverse=(side is Side.BUY))

    def queues(self, side):
        """``price -> [(id, volume)]`` in time priority."""
        out = {}
        for o in sorted(self.orders, key=lambda o: o["seq"]):
            if o["side"] is side:
                out.setdefault(o["price"], []).append((o["id"], o["volume"]))
        return out


# --- analytics -----------------------------------------------------------------


def total_volumes(bids, asks):
    vb = 0
    for _, v in bids:
        vb += v
    vs = 0
    for _, v in asks:
        vs += v
    return vb, vs


def _median_share_price(levels_best_first):
    shares = []
    for p, v in levels_best_first:
        shares.extend([p] * v)
    # the ceil(n/2)-th share counted away from the spread
    return shares[(len(shares) + 1) // 2 - 1]


def median_width(bids, asks):
    return _median_share_price(asks) - _median_share_price(bids)


def shape_bins(snapshots, bins_per_unit):
    """Mean volume per (side, bin), binning with exact rationals."""
    sums = {}
    count = 0
    for s in snapshots:
        if not s.bids or not s.asks:
            continue
        count += 1
        mid = Fraction(s.bids[0][0] + s.asks[0][0], 2)
        for side, levels in (("B", s.bids), ("S", s.asks)):
            for p, v in levels:
                k = math.floor((Fraction(p) / mid - 1) * bins_per_unit)
                sums[(side, k)] = sums.get((side, k), 0) + v
    return {key: Fraction(v, count) for key, v in sums.items()}, count


def mean_abs_return(times, values, horizon, day_starts=None, window=None, intraday=False):
    """All-pairs scan: every (i, j) whose time gap equals ``horizon``."""
    def day_sec(t):
        d = 0
        while d + 1 < len(day_starts) and day_starts[d + 1] <= t:
            d += 1
        return d, t - day_starts[d]

    diffs = []
    for i in range(len(times)):
        for j in range(i + 1, len(times)):
            if not math.isclose(times[j] - times[i], horizon, rel_tol=1e-9):
                continue
            if math.isnan(values[i]) or math.isnan(values[j]):
                continue
            if day_starts is not None:
                di, si = day_sec(times[i])
                dj, sj = day_sec(times[j])
                if intraday and di != dj:
                    continue
                if window is not None and not (window[0] <= si <= window[1] and window[0] <= sj <= window[1]):
                    continue
            diffs.append(abs(values[j] - values[i]))
    if not diffs:
        return None
    return math.fsum(diffs) / len(diffs)


def grid_cells(snapshots, lo, hi, cap):
    """Per-cell lookup rendering: rows of ints or 'S'."""
    rows = []
    for s in snapshots:
        bd = dict(s.bids)
        ad = dict(s.asks)
        bb = max(bd) if bd else None
        ba = min(ad) if ad else None
        row = []
        for p in range(lo, hi + 1):
            if bb is not None and ba is not None and bb < p < ba:
                row.append("S")
            elif p in bd:
                row.append(min(bd[p], cap))
            elif p in ad:
                row.append(-min(ad[p], cap))
            else:
                row.append(0)
        rows.append(row)
    return rows
