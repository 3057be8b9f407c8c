"""Compare the compiled and pure-Python book kernels.

Usage::

    python3 benchmarks/bench_book.py [--events N] [--repeat R] [--days D]

Three workloads: the synthetic stream fed straight to the kernel (no
validation or execution objects), the same stream through the ``Book``
facade, and a generated order-flow file replayed with no observers. The
stream is adds, cancels and market orders in a narrow band, so it is
matching-heavy. Reports the best of ``R`` runs in events per second.
"""

from __future__ import annotations

import argparse
import random
import time

from lobkit.book import CORES, Book
from lobkit.events import AddLimit, Cancel, Market, replay
from lobkit.flowgen import FlowConfig, generate_events
from lobkit.types import Side


def synthetic_stream(n: int, seed: int = 1, band: int = 40) -> list:
    rng = random.Random(seed)
    events = []
    live = []
    next_id = 0
    for i in range(n):
        u = rng.random()
        if u < 0.55 or not live:
            side = Side(rng.randrange(2))
            off = int(rng.expovariate(0.3))
            price = 1000 - 1 - off if side is Side.BUY else 1000 + 1 + off
            if rng.random() < 0.1:
                price += 3 if side is Side.BUY else -3
            price = max(1000 - band, min(1000 + band, price))
            events.append(AddLimit(float(i), next_id, side, price, rng.randint(1, 500)))
            live.append(next_id)
            next_id += 1
        elif u < 0.75:
            events.append(Market(float(i), Side(rng.randrange(2)), rng.randint(1, 400)))
        else:
            j = rng.randrange(len(live))
            live[j], live[-1] = live[-1], live[j]
            events.append(Cancel(float(i), live.pop(), None))
    return events


def run_stream(core: str, events) -> int:
    """Apply events straight to the book, skipping stale cancels."""
    book = Book(core)
    fills = 0
    for ev in events:
        if isinstance(ev, AddLimit):
            fills += len(book.add_limit(ev.order_id, ev.side, ev.price, ev.volume, ev.t))
        elif isinstance(ev, Market):
            if book.total_volume(ev.side.opposite):
                fills += len(book.add_market(ev.side, ev.volume, ev.t))
        elif ev.order_id in book:
            book.cancel(ev.order_id)
    return fills


def run_kernel(core: str, ops) -> None:
    k = CORES[core]()
    for op, a, b, c, d in ops:
        if op == 0:
            k.add(a, b, c, d)
        elif op == 1:
            if k.total_volume(1 - a):
                k.market(a, b)
        elif a in k:
            k.cancel(a, -1)


def kernel_ops(events) -> list[tuple]:
    ops = []
    for ev in events:
        if isinstance(ev, AddLimit):
            ops.append((0, ev.order_id, int(ev.side), ev.price, ev.volume))
        elif isinstance(ev, Market):
            ops.append((1, int(ev.side), ev.volume, 0, 0))
        else:
            ops.append((2, ev.order_id, 0, 0, 0))
    return ops


def best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n_events: int = 200_000, repeat: int = 3, days: int = 2) -> list[tuple[str, str, int, float]]:
    stream = synthetic_stream(n_events)
    flow = generate_events(FlowConfig(days=days))
    ops = kernel_ops(stream)
    rows = []
    for core in sorted(CORES):
        rows.append(("kernel", core, len(ops), best_time(lambda: run_kernel(core, ops), repeat)))
        rows.append(("book facade", core, len(stream), best_time(lambda: run_stream(core, stream), repeat)))
        rows.append(("flowgen replay", core, len(flow),
                     best_time(lambda: replay(flow, book=Book(core)), repeat)))
    return rows


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--days", type=int, default=2)
    args = ap.parse_args(argv)
    rows = bench(args.events, args.repeat, args.days)
    base = {w: s for w, c, _, s in rows if c == "python"}
    print(f"{'workload':<16} {'core':<9} {'events':>9} {'seconds':>9} {'events/s':>11} {'speedup':>8}")
    for workload, core, n, secs in rows:
        print(f"{workload:<16} {core:<9} {n:>9} {secs:>9.3f} {n / secs:>11.0f} {base[workload] / secs:>7.2f}x")
    if "compiled" not in CORES:
        print("compiled core not built; only the pure-Python kernel was measured")


if __name__ == "__main__":
    main()
