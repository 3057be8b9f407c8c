"""Pure-Python price-time priority book core.

Same contract as the compiled ``_ccore.BookCore``; used when the extension is
not built or ``LOBKIT_PURE_PYTHON=1`` is set. Sides are ints (0 buy, 1 sell),
fills are returned as ``(maker_id, price, volume)`` tuples.
"""

from bisect import bisect_left, insort
from collections import OrderedDict

from lobkit.errors import CancelExceedsVolume, DuplicateOrderId, UnknownOrderId

BUY = 0
SELL = 1


class _Side:
    __slots__ = ("sign", "keys", "queues", "totals", "volume")

    def __init__(self, sign):
        # key = sign * price, kept ascending so the best level is keys[-1]
        self.sign = sign
        self.keys = []
        self.queues = {}
        self.totals = {}
        self.volume = 0

    def best(self):
        return self.keys[-1] * self.sign if self.keys else None

    def add_level(self, price):
        q = OrderedDict()
        self.queues[price] = q
        self.totals[price] = 0
        insort(self.keys, price * self.sign)
        return q

    def drop_level(self, price):
        del self.queues[price]
        del self.totals[price]
        key = price * self.sign
        if self.keys[-1] == key:
            self.keys.pop()
        else:
            del self.keys[bisect_left(self.keys, key)]


class BookCore:
    def __init__(self):
        self._sides = (_Side(1), _Side(-1))
        # id -> [side, price, volume, seq]
        self._orders = {}
        self._seq = 0

    def __len__(self):
        return len(self._orders)

    def __contains__(self, order_id):
        return order_id in self._orders

    def best_bid(self):
        return self._sides[BUY].best()

    def best_ask(self):
        return self._sides[SELL].best()

    def total_volume(self, side):
        return self._sides[side].volume

    def next_seq(self):
        return self._seq

    def _take(self, opp, limit, volume, fills):
        """Consume ``opp`` best-first while its best price satisfies ``limit``.

        ``limit`` is in key units (sign * price); ``None`` means no limit.
        Returns the unfilled remainder.
        """
        orders = self._orders
        sign = opp.sign
        keys = opp.keys
        while volume > 0 and keys:
            key = keys[-1]
            if limit is not None and key < limit:
                break
            price = key * sign
            q = opp.queues[price]
            while volume > 0 and q:
                oid = next(iter(q))
                rec = q[oid]
                avail = rec[2]
                if avail <= volume:
                    fills.append((oid, price, avail))
                    volume -= avail
                    opp.totals[price] -= avail
                    opp.volume -= avail
                    q.popitem(last=False)
                    del orders[oid]
                else:
                    fills.append((oid, price, volume))
                    rec[2] = avail - volume
                    opp.totals[price] -= volume
                    opp.volume -= volume
                    volume = 0
            if not q:
                opp.drop_level(price)
        return volume

    def add(self, order_id, side, price, volume):
        if order_id in self._orders:
            raise DuplicateOrderId(order_id)
        fills = []
        opp = self._sides[1 - side]
        # a buy crosses asks with price <= limit, i.e. key (-price) >= -limit
        remaining = self._take(opp, price * opp.sign, volume, fills)
        if remaining:
            own = self._sides[side]
            q = own.queues.get(price)
            if q is None:
                q = own.add_level(price)
            rec = [side, price, remaining, self._seq]
            q[order_id] = rec
            own.totals[price] += remaining
            own.volume += remaining
            self._orders[order_id] = rec
        self._seq += 1
        return fills

    def market(self, side, volume):
        fills = []
        self._take(self._sides[1 - side], None, volume, fills)
        return fills

    def cancel(self, order_id, volume=-1):
        """Cancel ``volume`` shares of an order, or all of it when ``volume < 0``."""
        rec = self._orders.get(order_id)
        if rec is None:
            raise UnknownOrderId(order_id)
        side, price, resting, _ = rec
        if volume > resting:
            raise CancelExceedsVolume(order_id, volume, resting)
        s = self._sides[side]
        if volume < 0 or volume == resting:
            volume = resting
            q = s.queues[price]
            del q[order_id]
            del self._orders[order_id]
            s.totals[price] -= volume
            s.volume -= volume
            if not q:
                s.drop_level(price)
        else:
            rec[2] = resting - volume
            s.totals[price] -= volume
            s.volume -= volume
        return volume

    def order(self, order_id):
        rec = self._orders.get(order_id)
        if rec is None:
            raise UnknownOrderId(order_id)
        return tuple(rec)

    def depth(self, side):
        s = self._sides[side]
        sign = s.sign
        totals = s.totals
        return [(k * sign, totals[k * sign]) for k in reversed(s.keys)]

    def level_volume(self, side, price):
        return self._sides[side].totals.get(price, 0)

    def levels(self, side):
        s = self._sides[side]
        out = []
        for k in reversed(s.keys):
            price = k * s.sign
            out.append((price, [(oid, r[2], r[3]) for oid, r in s.queues[price].items()]))
        return out
