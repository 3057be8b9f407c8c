"""Random event sequences for oracle and property tests."""

import random

from hypothesis import strategies as st

from lobkit.events import AddLimit, Cancel, Market
from lobkit.types import Side


def random_events(rng: random.Random, n: int, lo: int = 1000, band: int = 200,
                  invalid: float = 0.05):
    """Mostly valid events in ``[lo, lo + band)``; a few deliberately bad ones."""
    events = []
    t = 0.0
    next_id = 1
    live = {}  # id -> volume we believe is resting (may be stale after fills)
    mid = lo + band // 2
    for _ in range(n):
        t += rng.choice((0.0, 0.5, 1.0, 3.0))
        u = rng.random()
        if u < invalid:
            kind = rng.randrange(3)
            if kind == 0 and live:
                events.append(AddLimit(t, rng.choice(list(live)), Side(rng.randrange(2)), mid, 10))
            elif kind == 1:
                events.append(Cancel(t, 10**9 + rng.randrange(1000), None))
            elif live:
                oid = rng.choice(list(live))
                events.append(Cancel(t, oid, live[oid] + rng.randint(1, 50)))
            continue
        if u < 0.6 or not live:
            side = Side(rng.randrange(2))
            # skew prices so that both resting and crossing orders occur
            offset = int(rng.expovariate(1 / 8))
            price = mid - 1 - offset if side is Side.BUY else mid + 1 + offset
            if rng.random() < 0.15:
                price += (6 if side is Side.BUY else -6)
            price = min(max(price, lo), lo + band - 1)
            vol = rng.randint(1, 100)
            events.append(AddLimit(t, next_id, side, price, vol))
            live[next_id] = vol
            next_id += 1
        elif u < 0.75:
            events.append(Market(t, Side(rng.randrange(2)), rng.randint(1, 150)))
        else:
            oid = rng.choice(list(live))
            if rng.random() < 0.5:
                events.append(Cancel(t, oid, None))
                del live[oid]
            else:
                events.append(Cancel(t, oid, rng.randint(1, max(1, live[oid] // 2))))
    return events


@st.composite
def event_sequences(draw, max_size=120):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(0, max_size))
    band = draw(st.integers(2, 60))
    return random_events(random.Random(seed), n, lo=500, band=band)


def snapshot_levels(rng: random.Random, n_levels: int, max_vol: int = 60, lo: int = 100):
    """Random uncrossed depth: (bids best-first, asks best-first)."""
    mid = lo + rng.randint(50, 2000)
    gap = rng.randint(1, 5)
    bid0 = mid - rng.randint(0, gap - 1) if gap > 1 else mid
    ask0 = bid0 + gap
    nb = rng.randint(1, n_levels)
    na = rng.randint(1, n_levels)
    bid_prices = sorted(rng.sample(range(bid0 - 3 * n_levels, bid0), nb - 1) + [bid0], reverse=True)
    ask_prices = sorted(rng.sample(range(ask0 + 1, ask0 + 3 * n_levels + 1), na - 1) + [ask0])
    bids = tuple((p, rng.randint(1, max_vol)) for p in bid_prices)
    asks = tuple((p, rng.randint(1, max_vol)) for p in ask_prices)
    return bids, asks
