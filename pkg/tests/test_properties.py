"""Property tests for the book, analytics, calendar and grid invariants."""

import math
import random

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

import oracles
from gen import event_sequences, snapshot_levels
from lobkit import analytics
from lobkit.book import CORES, Book
from lobkit.errors import LobkitError
from lobkit.events import (
    AddLimit,
    Cancel,
    Market,
    TradingCalendar,
    apply_event,
    from_day_time,
    parse_events,
    serialize_events,
    to_day_time,
)
from lobkit.snapshot import grid
from lobkit.types import Side, Snapshot

PROFILE = settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def run_checked(events, core):
    """Apply events one at a time, checking invariants and bookkeeping after each."""
    book = Book(core)
    added = {Side.BUY: 0, Side.SELL: 0}
    executed = {Side.BUY: 0, Side.SELL: 0}  # by maker side
    cancelled = {Side.BUY: 0, Side.SELL: 0}
    log = []
    for i, ev in enumerate(events):
        side_of = None
        if isinstance(ev, Cancel) and ev.order_id in book:
            side_of = book.order(ev.order_id).side
            before = book.order(ev.order_id).volume
        try:
            fills, dropped = apply_event(book, ev, i)
        except LobkitError:
            continue
        got = sum(f.volume for f in fills)
        for f in fills:
            executed[f.aggressor.opposite] += f.volume
            # maker price rule: never worse than the taker's limit
            if isinstance(ev, AddLimit):
                assert f.price <= ev.price if ev.side is Side.BUY else f.price >= ev.price
        if isinstance(ev, AddLimit):
            added[ev.side] += ev.volume - got
        elif isinstance(ev, Market):
            assert got + dropped == ev.volume
        elif side_of is not None:
            cancelled[side_of] += before if ev.volume is None else ev.volume
        book.check_invariants()
        for side in Side:
            assert book.total_volume(side) == added[side] - executed[side] - cancelled[side]
        log.extend(fills)
    return book, log


@PROFILE
@given(event_sequences())
def test_book_invariants_hold(events):
    run_checked(events, "python")


def apply_direct(book, ev, index):
    """Like ``apply_event`` but lets EmptyOppositeSide propagate."""
    if isinstance(ev, AddLimit):
        return book.add_limit(ev.order_id, ev.side, ev.price, ev.volume, ev.t)
    if isinstance(ev, Market):
        return book.add_market(ev.side, ev.volume, ev.t, taker_ref=f"m{index}")
    book.cancel(ev.order_id, ev.volume)
    return []


@PROFILE
@given(event_sequences())
def test_cores_agree_with_oracle(events):
    ref = oracles.BruteMatcher()
    books = {name: Book(name) for name in CORES}
    for i, ev in enumerate(events):
        want, err = ref.apply(ev)
        for name, book in books.items():
            try:
                fills = apply_direct(book, ev, i)
                got_err = None
            except LobkitError as exc:
                fills, got_err = [], type(exc).__name__
            assert got_err == err, (name, i, ev)
            got = [(f.time, f.maker_order_id, f.aggressor.code, f.price, f.volume) for f in fills]
            assert got == want, (name, i, ev)
    for book in books.values():
        for side in Side:
            assert book.depth(side) == ref.depth(side)
            queues = {p: [(oid, v) for oid, v, _ in q] for p, q in book.levels(side)}
            assert queues == ref.queues(side)


@PROFILE
@given(event_sequences(max_size=80))
def test_fifo_fairness(events):
    """Fills at a level take a prefix of its queue, consuming all but the last maker."""
    book = Book("python")
    for i, ev in enumerate(events):
        before = {p: q for side in Side for p, q in book.levels(side)}
        try:
            fills, _ = apply_event(book, ev, i)
        except LobkitError:
            continue
        by_level = {}
        for f in fills:
            by_level.setdefault(f.price, []).append((f.maker_order_id, f.volume))
        for price, taken in by_level.items():
            queue = before[price]
            assert [oid for oid, _ in taken] == [oid for oid, _, _ in queue[:len(taken)]]
            for (oid, vol), (_, resting, _) in zip(taken[:-1], queue):
                assert vol == resting
            assert taken[-1][1] <= queue[len(taken) - 1][1]


# --- analytics ----------------------------------------------------------------------


snapshots = st.builds(lambda seed, n: Snapshot(0.0, *snapshot_levels(random.Random(seed), n)),
                      st.integers(0, 2**32 - 1), st.integers(1, 50))


@PROFILE
@given(snapshots, st.integers(1, 10**6))
def test_imbalance_identity_and_scaling(s, k):
    p = analytics.imbalance(s)
    assert abs(p.i_buy - p.i_sell - 1) <= 2**-50
    assert 0 < p.i_buy < 1 and -1 < p.i_sell < 0
    q = analytics.imbalance(s.scaled(k))
    assert (q.i_buy, q.i_sell) == (p.i_buy, p.i_sell)
    assert analytics.median_width(s.scaled(k)) == analytics.median_width(s)
    assert analytics.median_width(s.scaled(k), "symmetric") == analytics.median_width(s, "symmetric")


@PROFILE
@given(snapshots, st.integers(-50, 5000))
def test_translation_covariance(s, k):
    moved = s.shifted(k)
    assert analytics.median_width(moved) == analytics.median_width(s)
    assert analytics.total_volumes(moved) == analytics.total_volumes(s)


@PROFILE
@given(snapshots)
def test_median_width_matches_share_scan(s):
    assert analytics.median_width(s) == oracles.median_width(s.bids, s.asks)
    assert analytics.median_width(s) >= s.best_ask - s.best_bid


@PROFILE
@given(st.lists(st.integers(0, 40), min_size=2, max_size=80), st.integers(1, 5), st.integers(-1000, 1000))
def test_mean_abs_return_properties(values, lag, shift):
    assume(lag < len(values))
    t = np.arange(len(values), dtype=float)
    m = np.array(values, dtype=float) / 2
    r = analytics.mean_abs_return(t, m, lag)
    assert r >= 0
    assert analytics.mean_abs_return(t, m + shift, lag) == r
    constant_pairs = all(m[i + lag] == m[i] for i in range(len(m) - lag))
    assert (r == 0) == constant_pairs


@PROFILE
@given(snapshots, st.sampled_from(["limit", "market", "cancel"]), st.integers(0, 2**16), st.integers(2, 9))
def test_quote_change_single_label_and_scale_stable(s, kind, seed, k):
    rng = random.Random(seed)
    book = Book("python")
    oid = 0
    ids = []
    for side, levels in ((Side.BUY, s.bids), (Side.SELL, s.asks)):
        for p, v in levels:
            book.add_limit(oid, side, p, v)
            ids.append(oid)
            oid += 1
    side = Side(rng.randrange(2))
    if kind == "limit":
        ev = AddLimit(1, oid, side, rng.randint(s.best_bid - 5, s.best_ask + 5), rng.randint(1, 120))
    elif kind == "market":
        ev = Market(1, side, rng.randint(1, 120))
    else:
        ev = Cancel(1, rng.choice(ids), None)
    pre = book.snapshot(0)
    apply_event(book, ev)
    post = book.snapshot(1)
    labels = {analytics.classify_quote_change(pre, ev, post, q) for q in Side}
    assert all(isinstance(x, analytics.QuoteChange) for x in labels)
    # rescaling every volume (event included) must not change any label
    if isinstance(ev, AddLimit):
        ev_k = AddLimit(1, oid, ev.side, ev.price, ev.volume * k)
    elif isinstance(ev, Market):
        ev_k = Market(1, ev.side, ev.volume * k)
    else:
        ev_k = ev
    for q in Side:
        assert analytics.classify_quote_change(pre.scaled(k), ev_k, post.scaled(k), q) \
            == analytics.classify_quote_change(pre, ev, post, q)


@PROFILE
@given(st.lists(snapshots, min_size=1, max_size=6), st.integers(0, 6))
def test_shape_merge_is_exact(snaps, cut):
    def build(ss):
        prof = analytics.ShapeProfile()
        for s in ss:
            analytics.accumulate_shape(prof, s)
        return prof

    whole = build(snaps)
    merged = build(snaps[:cut]).merge(build(snaps[cut:]))
    for side in Side:
        assert merged.mean(side) == whole.mean(side)


# --- calendar, format, grid ----------------------------------------------------------


@PROFILE
@given(st.integers(0, 2**20), st.integers(0, 251))
def test_calendar_bijection_dyadic(num, day):
    cal = TradingCalendar.lse_2002()
    second = (num / 2**6) % cal.length(day)
    t = from_day_time(day, second, cal)
    assert to_day_time(t, cal) == (day, second)


@PROFILE
@given(st.floats(0, TradingCalendar.lse_2002().span, exclude_max=True))
def test_calendar_round_trip_floats(t):
    cal = TradingCalendar.lse_2002()
    day, sec = to_day_time(t, cal)
    assert 0 <= sec < cal.length(day)
    back = from_day_time(day, sec, cal)
    assert abs(back - t) <= math.ulp(t)


@PROFILE
@given(event_sequences(max_size=40))
def test_serialize_parse_round_trip(events):
    text = "".join(serialize_events(events))
    assert list(parse_events(text.splitlines(keepends=True))) == events


@PROFILE
@given(snapshots, st.integers(1, 200), st.integers(5, 300))
def test_grid_sign_and_volume(s, cap, half):
    mid = (s.best_bid + s.best_ask) // 2
    lo, hi = mid - half, mid + half
    g = grid([s], (lo, hi), cap=cap)
    row = g.cells[0]
    prices = g.prices
    assert not np.any((row > 0) & (prices > s.best_bid))
    assert not np.any((row < 0) & (prices < s.best_ask))
    assert np.all(np.abs(row) <= cap)
    unclipped = grid([s], (lo, hi), cap=10**12).cells[0]
    assert unclipped[unclipped > 0].sum() == sum(v for p, v in s.bids if lo <= p <= hi)
    assert -unclipped[unclipped < 0].sum() == sum(v for p, v in s.asks if lo <= p <= hi)
