"""Plain domain types shared across modules."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional


class Side(enum.IntEnum):
    BUY = 0
    SELL = 1

    @property
    def code(self) -> str:
        return "B" if self is Side.BUY else "S"

    @property
    def opposite(self) -> "Side":
        return Side.SELL if self is Side.BUY else Side.BUY

    @classmethod
    def from_code(cls, code: str) -> "Side":
        if code == "B":
            return cls.BUY
        if code == "S":
            return cls.SELL
        raise ValueError(f"unknown side code {code!r}")


@dataclass(frozen=True, slots=True)
class Order:
    """A limit order as submitted; ``seq`` is filled in by the book."""

    id: int
    side: Side
    price: int
    volume: int
    seq: Optional[int] = None


@dataclass(frozen=True, slots=True)
class Execution:
    time: float
    price: int
    volume: int
    aggressor: Side
    maker_order_id: int
    taker_ref: object = None

    def to_csv(self) -> str:
        from lobkit.events import format_time

        return (
            f"{format_time(self.time)},{self.maker_order_id},{self.aggressor.code},"
            f"{self.price},{self.volume}"
        )


@dataclass(frozen=True)
class Snapshot:
    """Aggregated depth of both sides at one instant.

    ``bids`` is best-first (descending price), ``asks`` best-first (ascending).
    """

    t: float
    bids: tuple[tuple[int, int], ...] = ()
    asks: tuple[tuple[int, int], ...] = ()
    _bid_map: dict = field(init=False, repr=False, compare=False, default=None)
    _ask_map: dict = field(init=False, repr=False, compare=False, default=None)

    @classmethod
    def from_depth(cls, t: float, bid_depth: dict, ask_depth: dict) -> "Snapshot":
        bids = tuple(sorted(((int(p), int(v)) for p, v in bid_depth.items() if v), reverse=True))
        asks = tuple(sorted((int(p), int(v)) for p, v in ask_depth.items() if v))
        return cls(t, bids, asks)

    @property
    def best_bid(self) -> Optional[int]:
        return self.bids[0][0] if self.bids else None

    @property
    def best_ask(self) -> Optional[int]:
        return self.asks[0][0] if self.asks else None

    @property
    def bid_depth(self) -> dict:
        if self._bid_map is None:
            object.__setattr__(self, "_bid_map", dict(self.bids))
        return self._bid_map

    @property
    def ask_depth(self) -> dict:
        if self._ask_map is None:
            object.__setattr__(self, "_ask_map", dict(self.asks))
        return self._ask_map

    @property
    def two_sided(self) -> bool:
        return bool(self.bids) and bool(self.asks)

    def scaled(self, factor: int) -> "Snapshot":
        return Snapshot(
            self.t,
            tuple((p, v * factor) for p, v in self.bids),
            tuple((p, v * factor) for p, v in self.asks),
        )

    def shifted(self, ticks: int) -> "Snapshot":
        return Snapshot(
            self.t,
            tuple((p + ticks, v) for p, v in self.bids),
            tuple((p + ticks, v) for p, v in self.asks),
        )
