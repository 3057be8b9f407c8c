import os
import subprocess
import sys

import pytest

from lobkit.book import CORES, Book, apply_cancel, apply_limit, apply_market, midquote, spread
from lobkit.errors import (
    CancelExceedsVolume,
    DuplicateOrderId,
    EmptyOppositeSide,
    InvalidOrderId,
    NonPositivePrice,
    NonPositiveVolume,
    OneSidedBook,
    UnknownOrderId,
)
from lobkit.types import Order, Side

B, S = Side.BUY, Side.SELL


def fills(execs):
    return [(e.maker_order_id, e.price, e.volume) for e in execs]


def test_add_to_empty_book_rests(book):
    assert book.add_limit(1, B, 50, 100) == []
    assert book.best_bid == 50
    assert book.best_ask is None


def test_crossing_limit_executes_at_maker_price(book):
    book.add_limit(7, S, 51, 30)
    execs = book.add_limit(8, B, 52, 40)
    assert fills(execs) == [(7, 51, 30)]
    assert execs[0].aggressor is B
    assert execs[0].taker_ref == 8
    assert book.best_bid == 52
    assert book.order(8).volume == 10
    assert book.best_ask is None


def test_fifo_within_level(book):
    book.add_limit(1, S, 51, 10)
    book.add_limit(2, S, 51, 10)
    assert fills(book.add_limit(3, B, 51, 15)) == [(1, 51, 10), (2, 51, 5)]
    assert book.order(2).volume == 5
    assert 3 not in book


def test_market_walks_levels(book):
    book.add_limit(1, S, 51, 20)
    book.add_limit(2, S, 53, 10)
    assert fills(book.add_market(B, 25)) == [(1, 51, 20), (2, 53, 5)]
    assert book.best_ask == 53
    assert book.level_volume(S, 53) == 5


def test_market_removing_best_moves_quote_by_gap(book):
    book.add_limit(1, S, 51, 20)
    book.add_limit(2, S, 54, 20)
    before = book.best_ask
    book.add_market(B, 20)
    assert book.best_ask - before == 3


def test_market_against_empty_side(book):
    book.add_limit(1, B, 50, 20)
    with pytest.raises(EmptyOppositeSide):
        book.add_market(B, 10)
    assert book.depth(B) == [(50, 20)]


def test_market_remainder_is_discarded(book):
    book.add_limit(1, S, 51, 5)
    assert fills(book.add_market(B, 50)) == [(1, 51, 5)]
    assert book.best_ask is None and book.best_bid is None


def test_cancel_all(book):
    book.add_limit(3, B, 50, 30)
    assert book.cancel(3) == 30
    assert book.best_bid is None
    assert len(book) == 0


def test_partial_cancel_keeps_priority(book):
    book.add_limit(3, B, 50, 30)
    book.add_limit(4, B, 50, 30)
    assert book.cancel(3, 10) == 10
    assert book.order(3).volume == 20
    assert [oid for oid, _, _ in book.levels(B)[0][1]] == [3, 4]
    book.add_limit(5, S, 50, 25)
    assert book.order(4).volume == 25
    assert 3 not in book


def test_cancel_errors(book):
    with pytest.raises(UnknownOrderId):
        book.cancel(9)
    book.add_limit(3, B, 50, 30)
    with pytest.raises(CancelExceedsVolume):
        book.cancel(3, 31)
    assert book.order(3).volume == 30
    assert book.cancel(3, 30) == 30
    assert 3 not in book


def test_validation(book):
    book.add_limit(1, B, 50, 10)
    with pytest.raises(DuplicateOrderId):
        book.add_limit(1, S, 60, 10)
    with pytest.raises(NonPositiveVolume):
        book.add_limit(2, B, 50, 0)
    with pytest.raises(NonPositivePrice):
        book.add_limit(2, B, -1, 10)
    with pytest.raises(InvalidOrderId):
        book.add_limit(-5, B, 50, 10)
    with pytest.raises(InvalidOrderId):
        book.add_limit(2**63, B, 50, 10)
    with pytest.raises(NonPositiveVolume):
        book.add_market(S, 0)
    with pytest.raises(NonPositiveVolume):
        book.cancel(1, 0)
    assert book.depth(B) == [(50, 10)] and len(book) == 1


def test_duplicate_id_does_not_match(book):
    book.add_limit(1, B, 50, 10)
    book.add_limit(2, S, 55, 10)
    with pytest.raises(DuplicateOrderId):
        book.add_limit(2, B, 60, 10)
    assert book.depth(S) == [(55, 10)]


def test_filled_id_can_be_reused(book):
    book.add_limit(1, S, 51, 10)
    book.add_limit(2, B, 51, 10)
    book.add_limit(1, B, 49, 5)
    assert book.order(1).side is B


@pytest.mark.parametrize("b,a,s,m", [(1698, 1700, 2, 1699.0), (50, 51, 1, 50.5)])
def test_spread_and_midquote(book, b, a, s, m):
    book.add_limit(1, B, b, 1)
    book.add_limit(2, S, a, 1)
    assert spread(book) == s
    assert midquote(book) == m
    assert book.midquote2() == a + b


def test_one_sided_quotes(book):
    with pytest.raises(OneSidedBook):
        book.spread()
    book.add_limit(1, B, 10, 1)
    with pytest.raises(OneSidedBook):
        book.midquote()


def test_functional_wrappers(book):
    book, execs = apply_limit(book, Order(1, S, 51, 30))
    assert execs == []
    book, execs = apply_market(book, B, 10)
    assert fills(execs) == [(1, 51, 10)]
    book = apply_cancel(book, 1, 5)
    assert book.order(1).volume == 15


def test_depth_and_snapshot(book):
    for i, (side, p, v) in enumerate([(B, 50, 1), (B, 48, 2), (B, 50, 3), (S, 52, 4), (S, 55, 5)]):
        book.add_limit(i, side, p, v)
    assert book.depth(B) == [(50, 4), (48, 2)]
    assert book.depth(S) == [(52, 4), (55, 5)]
    snap = book.snapshot(7.0)
    assert snap.bids == ((50, 4), (48, 2)) and snap.asks == ((52, 4), (55, 5))
    assert snap.best_bid == 50 and snap.best_ask == 52
    book.add_limit(9, S, 50, 4)
    assert snap.bids == ((50, 4), (48, 2))
    book.check_invariants()


def test_big_ids_and_volumes(book):
    big = 2**63 - 1
    book.add_limit(big, S, 10**9, 2**40)
    execs = book.add_limit(0, B, 10**9, 2**41)
    assert fills(execs) == [(big, 10**9, 2**40)]
    assert book.order(0).volume == 2**40


def test_unknown_core():
    with pytest.raises(ValueError):
        Book("gpu")


def test_python_core_always_available():
    assert "python" in CORES


def test_pure_python_selected_by_env():
    code = "import lobkit.book as b; print(b.DEFAULT_CORE, sorted(b.CORES))"
    env = {**os.environ, "LOBKIT_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split()[0] == "python"
