"""Limit order book with price-time priority matching.

The matching kernel comes from the compiled ``lobkit._ccore`` extension when
it is importable, otherwise from the pure-Python ``lobkit._pycore``. Setting
``LOBKIT_PURE_PYTHON=1`` forces the fallback. Both kernels produce identical
execution logs for identical inputs.
"""

from __future__ import annotations

import os
from typing import Optional

from lobkit import _pycore
from lobkit.errors import (
    EmptyOppositeSide,
    InvalidOrderId,
    InvariantBreach,
    NonPositivePrice,
    NonPositiveVolume,
    OneSidedBook,
)
from lobkit.types import Execution, Order, Side, Snapshot

_INT64_MAX = 2**63 - 1

try:
    if os.environ.get("LOBKIT_PURE_PYTHON") == "1":
        raise ImportError("pure Python kernel requested")
    from lobkit import _ccore
except ImportError:
    _ccore = None

CORES = {"python": _pycore.BookCore}
if _ccore is not None:
    CORES["compiled"] = _ccore.BookCore

DEFAULT_CORE = "compiled" if _ccore is not None else "python"


def _check_int(name, value, exc):
    if isinstance(value, bool) or not isinstance(value, int):
        raise exc(f"{name} must be an int, got {value!r}")
    if value <= 0:
        raise exc(f"{name} must be positive, got {value}")
    if value > _INT64_MAX:
        raise exc(f"{name} {value} exceeds the 64-bit range")


class Book:
    """Two price ladders of FIFO queues.

    Mutation is single-writer. :meth:`snapshot` returns an immutable copy
    that may be shared freely.
    """

    def __init__(self, core: Optional[str] = None):
        self.core_name = core or DEFAULT_CORE
        try:
            self._core = CORES[self.core_name]()
        except KeyError:
            raise ValueError(f"unknown book core {self.core_name!r}; have {sorted(CORES)}") from None

    def __len__(self) -> int:
        return len(self._core)

    def __contains__(self, order_id) -> bool:
        return order_id in self._core

    @property
    def best_bid(self) -> Optional[int]:
        return self._core.best_bid()

    @property
    def best_ask(self) -> Optional[int]:
        return self._core.best_ask()

    def add_limit(self, order_id: int, side: Side, price: int, volume: int,
                  t: float = 0.0) -> list[Execution]:
        if isinstance(order_id, bool) or not isinstance(order_id, int) or not 0 <= order_id <= _INT64_MAX:
            raise InvalidOrderId(f"order id must be a non-negative 64-bit int, got {order_id!r}")
        _check_int("price", price, NonPositivePrice)
        _check_int("volume", volume, NonPositiveVolume)
        side = Side(side)
        fills = self._core.add(order_id, side, price, volume)
        return [Execution(t, p, v, side, maker, order_id) for maker, p, v in fills]

    def add_market(self, side: Side, volume: int, t: float = 0.0,
                   taker_ref=None) -> list[Execution]:
        """Execute immediately against the opposite side.

        Any volume left once the opposite side is exhausted is dropped. A
        market order that finds the opposite side empty raises
        :class:`EmptyOppositeSide` and leaves the book untouched.
        """
        _check_int("volume", volume, NonPositiveVolume)
        side = Side(side)
        if self._core.total_volume(1 - side) == 0:
            raise EmptyOppositeSide(f"market {side.name} {volume}: no resting {side.opposite.name} orders")
        fills = self._core.market(side, volume)
        return [Execution(t, p, v, side, maker, taker_ref) for maker, p, v in fills]

    def cancel(self, order_id: int, volume: Optional[int] = None) -> int:
        """Cancel ``volume`` shares of a resting order (all of it if ``None``).

        A partial cancel keeps the order's queue position. Returns the
        volume removed.
        """
        if volume is None:
            return self._core.cancel(order_id, -1)
        _check_int("volume", volume, NonPositiveVolume)
        return self._core.cancel(order_id, volume)

    def order(self, order_id: int) -> Order:
        side, price, volume, seq = self._core.order(order_id)
        return Order(order_id, Side(side), price, volume, seq)

    def total_volume(self, side: Side) -> int:
        return self._core.total_volume(side)

    def depth(self, side: Side) -> list[tuple[int, int]]:
        """Aggregate ``(price, volume)`` per level, best level first."""
        return self._core.depth(side)

    def level_volume(self, side: Side, price: int) -> int:
        return self._core.level_volume(side, price)

    def levels(self, side: Side) -> list[tuple[int, list[tuple[int, int, int]]]]:
        """Per-level queues as ``(price, [(order_id, volume, seq), ...])``, best first."""
        return self._core.levels(side)

    def spread(self) -> int:
        b, a = self._core.best_bid(), self._core.best_ask()
        if b is None or a is None:
            raise OneSidedBook("spread needs both sides")
        return a - b

    def midquote2(self) -> int:
        """Midquote in half-tick units, i.e. ``a + b``."""
        b, a = self._core.best_bid(), self._core.best_ask()
        if b is None or a is None:
            raise OneSidedBook("midquote needs both sides")
        return a + b

    def midquote(self) -> float:
        return self.midquote2() / 2

    def snapshot(self, t: float = 0.0) -> Snapshot:
        return Snapshot(t, tuple(self._core.depth(0)), tuple(self._core.depth(1)))

    def check_invariants(self) -> None:
        """Full scan of the book; raises :class:`InvariantBreach` on any inconsistency."""
        b, a = self.best_bid, self.best_ask
        if b is not None and a is not None and b >= a:
            raise InvariantBreach(f"crossed book: bid {b} >= ask {a}")
        n = 0
        for side in Side:
            levels = self.levels(side)
            prices = [p for p, _ in levels]
            if prices != sorted(prices, reverse=(side is Side.BUY)):
                raise InvariantBreach(f"{side.name} ladder out of order")
            if levels and levels[0][0] != (b if side is Side.BUY else a):
                raise InvariantBreach(f"{side.name} best quote does not match ladder")
            total = 0
            for price, queue in levels:
                if not queue:
                    raise InvariantBreach(f"empty level {price}")
                seqs = [seq for _, _, seq in queue]
                if seqs != sorted(seqs) or any(v <= 0 for _, v, _ in queue):
                    raise InvariantBreach(f"queue at {price} breaks FIFO or holds empty orders")
                vol = sum(v for _, v, _ in queue)
                if vol != self.level_volume(side, price):
                    raise InvariantBreach(f"level {price} total mismatch")
                total += vol
                n += len(queue)
            if total != self.total_volume(side):
                raise InvariantBreach(f"{side.name} side total mismatch")
        if n != len(self):
            raise InvariantBreach("order index out of sync with ladders")


def apply_limit(book: Book, order: Order, t: float = 0.0) -> tuple[Book, list[Execution]]:
    return book, book.add_limit(order.id, order.side, order.price, order.volume, t)


def apply_market(book: Book, side: Side, volume: int, t: float = 0.0) -> tuple[Book, list[Execution]]:
    return book, book.add_market(side, volume, t)


def apply_cancel(book: Book, order_id: int, volume: Optional[int] = None) -> Book:
    book.cancel(order_id, volume)
    return book


def spread(book: Book) -> int:
    return book.spread()


def midquote(book: Book) -> float:
    return book.midquote()
