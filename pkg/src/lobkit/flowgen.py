"""Zero-intelligence order flow with the structure seen in real books.

Four populations share one book:

* near-spread flow: Poisson limit orders, market orders and per-order
  cancellations (a continuous-time Markov chain stepped event by event);
* stripes: one moderately sized order on every ``stripe_spacing``-th tick
  within ``stripe_depth`` of the opening quotes, placed at the open and left
  alone for the day;
* round-level orders: large orders on multiples of ``round_modulus`` that
  survive the end-of-day sweep;
* shocks: rare bursts of market orders that clear the near-spread depth on
  one side.

At one second before each day's end every order not on a round level is
cancelled.
"""

from __future__ import annotations

import dataclasses
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from lobkit.book import Book
from lobkit.errors import InvalidConfig
from lobkit.events import AddLimit, Cancel, Event, Market, TradingCalendar, serialize_events
from lobkit.types import Side

DEFAULT_TARGETS = {
    "mean_spread": (1.0, 4.0),
    "mean_midquote": (500.0, 5000.0),
    "median_width": (10.0, 200.0),
    "abs_return_1min": (0.2, 2.0),
    "abs_return_10min": (1.0, 8.0),
    "abs_return_1day": (5.0, 80.0),
    "abs_return_1month": (30.0, 400.0),
    "intertrade_time": (5.0, 20.0),
}


@dataclass
class FlowConfig:
    seed: int = 20020102
    days: int = 42
    day_length: float = 31501.0
    initial_mid: int = 1725

    # near-spread flow
    limit_rate: float = 0.6       # limit orders per second
    market_rate: float = 0.1      # market orders per second
    cancel_rate: float = 0.004    # per resting near-spread order per second
    improve_prob: float = 0.18    # chance a limit order improves its best by a tick
    offset_mean: float = 7.0      # mean ticks behind the own best, geometric
    max_offset: int = 20
    limit_volume_mean: float = 600.0
    market_volume_mean: float = 500.0
    sign_persistence: float = 0.99  # chance a market order repeats the previous side
    lot: int = 10
    seed_levels: int = 5

    stripe_spacing: int = 5
    stripe_depth: int = 100
    stripe_volume: int = 2500

    round_modulus: int = 50
    round_depth: int = 200
    round_volume: int = 20000

    shock_rate: float = 1.0       # per day
    shock_depth: int = 30         # ticks from the best counted as near-spread depth
    shock_fraction: float = 1.0
    shock_orders: int = 4
    shock_spacing: float = 2.0

    targets: dict = field(default_factory=lambda: dict(DEFAULT_TARGETS))

    def validate(self) -> "FlowConfig":
        rates = ("limit_rate", "market_rate", "cancel_rate", "shock_rate")
        for name in rates:
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be >= 0")
        if self.stripe_spacing < 1 or self.round_modulus < 1:
            raise InvalidConfig("stripe_spacing and round_modulus must be >= 1")
        if self.days < 1 or self.day_length < 2:
            raise InvalidConfig("need at least one day of at least 2 s")
        if not 0 <= self.sign_persistence < 1:
            raise InvalidConfig("sign_persistence must be in [0, 1)")
        if not 0 <= self.improve_prob <= 1 or not 0 < self.shock_fraction <= 1:
            raise InvalidConfig("improve_prob must be in [0, 1], shock_fraction in (0, 1]")
        if self.offset_mean < 0 or self.max_offset < 0 or self.lot < 1 or self.shock_orders < 1:
            raise InvalidConfig("offset_mean, max_offset >= 0; lot, shock_orders >= 1")
        if self.initial_mid <= self.stripe_depth + self.round_depth:
            raise InvalidConfig("initial_mid too low for the configured depths")
        for name, band in self.targets.items():
            if len(band) != 2 or band[0] > band[1]:
                raise InvalidConfig(f"bad target band for {name}: {band}")
        return self

    @classmethod
    def from_text(cls, text: str) -> "FlowConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment.

        Target bands are given as ``target.<row> = lo:hi``.
        """
        cfg = cls()
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidConfig(f"config line {n}: expected key=value")
            key, value = (x.strip() for x in line.split("=", 1))
            if key.startswith("target."):
                try:
                    lo, hi = (float(x) for x in value.split(":"))
                except ValueError:
                    raise InvalidConfig(f"config line {n}: target band must be lo:hi") from None
                cfg.targets[key[len("target."):]] = (lo, hi)
                continue
            if key not in types or key == "targets":
                raise InvalidConfig(f"config line {n}: unknown key {key!r}")
            caster = int if types[key] in ("int", int) else float
            try:
                setattr(cfg, key, caster(value))
            except ValueError:
                raise InvalidConfig(f"config line {n}: {key} needs a {caster.__name__}") from None
        return cfg.validate()

    @classmethod
    def from_file(cls, path) -> "FlowConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            if f.name == "targets":
                continue
            lines.append(f"{f.name} = {getattr(self, f.name)!r}")
        for name, (lo, hi) in sorted(self.targets.items()):
            lines.append(f"target.{name} = {lo!r}:{hi!r}")
        return "\n".join(lines) + "\n"

    def calendar(self) -> TradingCalendar:
        return TradingCalendar(self.days, self.day_length)


def _ms(t: float) -> float:
    return round(t, 3)


class _Generator:
    def __init__(self, cfg: FlowConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.book = Book()
        self.events: list[Event] = []
        self.next_id = 1
        self.cancellable: list[int] = []
        self.slot: dict[int, int] = {}
        self.round_at: dict[int, int] = {}  # price -> order id
        self.mid2 = 2 * cfg.initial_mid
        self.last_sign = Side.BUY
        q = 1.0 / (1.0 + cfg.offset_mean)  # geometric success prob with that mean
        self._log1mq = math.log1p(-q) if q < 1 else None
        self._trunc_mass = 1.0 - (1.0 - q) ** (cfg.max_offset + 1)

    # bookkeeping -----------------------------------------------------------

    def _track(self, oid):
        self.slot[oid] = len(self.cancellable)
        self.cancellable.append(oid)

    def _untrack(self, oid):
        i = self.slot.pop(oid, None)
        if i is None:
            return
        last = self.cancellable.pop()
        if last != oid:
            self.cancellable[i] = last
            self.slot[last] = i

    def _settle(self, fills):
        for f in fills:
            oid = f.maker_order_id
            if oid not in self.book:
                self._untrack(oid)

    def add(self, t, side, price, volume, cancellable=True) -> Optional[int]:
        opp_best = self.book.best_ask if side is Side.BUY else self.book.best_bid
        if price < 1 or (opp_best is not None and (price >= opp_best if side is Side.BUY else price <= opp_best)):
            return None
        oid = self.next_id
        self.next_id += 1
        self.events.append(AddLimit(t, oid, side, price, volume))
        self.book.add_limit(oid, side, price, volume, t)
        if cancellable:
            self._track(oid)
        return oid

    def market(self, t, side, volume):
        self.events.append(Market(t, side, volume))
        self._settle(self.book.add_market(side, volume, t))

    def cancel(self, t, oid):
        self.events.append(Cancel(t, oid, None))
        self.book.cancel(oid)
        self._untrack(oid)

    # draws -----------------------------------------------------------------

    def volume(self, mean):
        lot = self.cfg.lot
        return max(lot, lot * round(self.rng.expovariate(1.0 / mean) / lot))

    def offset(self):
        if self._log1mq is None or self.cfg.max_offset == 0:
            return 0
        u = self.rng.random()
        return min(int(math.log1p(-u * self._trunc_mass) / self._log1mq), self.cfg.max_offset)

    # day structure -----------------------------------------------------------

    def open_day(self, t):
        cfg = self.cfg
        b0 = (self.mid2 - 1) // 2
        a0 = self.mid2 // 2 + 1
        for j in range(cfg.seed_levels):
            self.add(t, Side.BUY, b0 - j, self.volume(cfg.limit_volume_mean))
            self.add(t, Side.SELL, a0 + j, self.volume(cfg.limit_volume_mean))
        sp = cfg.stripe_spacing
        for p in range(b0 - b0 % sp, b0 - cfg.stripe_depth - 1, -sp):
            self.add(t, Side.BUY, p, cfg.stripe_volume, cancellable=False)
        for p in range(a0 + (-a0) % sp, a0 + cfg.stripe_depth + 1, sp):
            self.add(t, Side.SELL, p, cfg.stripe_volume, cancellable=False)
        # round levels: drop stale far ones, top up the ones in range
        mid = self.mid2 / 2
        for p, oid in sorted(self.round_at.items()):
            if oid not in self.book:
                del self.round_at[p]
            elif abs(p - mid) > cfg.round_depth:
                self.cancel(t, oid)
                del self.round_at[p]
        rm = cfg.round_modulus
        lo = math.ceil((mid - cfg.round_depth) / rm) * rm
        for p in range(lo, int(mid + cfg.round_depth) + 1, rm):
            if p in self.round_at or p == mid:
                continue
            side = Side.BUY if p < mid else Side.SELL
            oid = self.add(t, side, p, cfg.round_volume, cancellable=False)
            if oid is not None:
                self.round_at[p] = oid

    def sweep(self, t):
        b, a = self.book.best_bid, self.book.best_ask
        if b is not None and a is not None:
            self.mid2 = a + b
        rm = self.cfg.round_modulus
        for side in Side:
            for price, queue in self.book.levels(side):
                if price % rm:
                    for oid, _, _ in queue:
                        self.cancel(t, oid)

    def shock(self, t):
        cfg = self.cfg
        side = Side.BUY if self.rng.random() < 0.5 else Side.SELL
        depth = self.book.depth(side.opposite)
        if not depth:
            return t
        best = depth[0][0]
        near = sum(v for p, v in depth if abs(p - best) <= cfg.shock_depth)
        total = int(near * cfg.shock_fraction)
        n = cfg.shock_orders
        for k in range(n):
            part = total // n + (1 if k < total % n else 0)
            if part > 0:
                self.market(_ms(t + k * cfg.shock_spacing), side, part)
        return t + (n - 1) * cfg.shock_spacing

    # flow --------------------------------------------------------------------

    def limit(self, t):
        cfg = self.cfg
        side = Side.BUY if self.rng.random() < 0.5 else Side.SELL
        own = self.book.best_bid if side is Side.BUY else self.book.best_ask
        opp = self.book.best_ask if side is Side.BUY else self.book.best_bid
        sign = 1 if side is Side.BUY else -1
        if own is None:
            if opp is not None:
                own = opp - sign
            else:
                own = (self.mid2 - 1) // 2 if side is Side.BUY else self.mid2 // 2 + 1
        improve = self.rng.random() < cfg.improve_prob
        price = own + sign if improve else own - sign * self.offset()
        if opp is not None:
            price = min(price, opp - 1) if side is Side.BUY else max(price, opp + 1)
        self.add(t, side, price, self.volume(cfg.limit_volume_mean))

    def run_day(self, day, cal):
        cfg, rng = self.cfg, self.rng
        start = cal.day_start(day)
        sweep_at = cal.day_end(day) - 1
        self.open_day(_ms(start))
        n_shocks = _poisson(rng, cfg.shock_rate)
        last_shock = sweep_at - (cfg.shock_orders - 1) * cfg.shock_spacing - 1
        shocks = sorted(rng.uniform(start, last_shock) for _ in range(n_shocks))
        t = start
        while True:
            rate = cfg.limit_rate + cfg.market_rate + cfg.cancel_rate * len(self.cancellable)
            t = t + rng.expovariate(rate) if rate > 0 else math.inf
            if shocks and shocks[0] <= min(t, sweep_at):
                ts = shocks.pop(0)
                t = self.shock(ts)
                continue
            if t >= sweep_at:
                break
            ts = _ms(t)
            u = rng.random() * rate
            if u < cfg.limit_rate:
                self.limit(ts)
            elif u < cfg.limit_rate + cfg.market_rate:
                if rng.random() >= cfg.sign_persistence:
                    self.last_sign = Side.BUY if rng.random() < 0.5 else Side.SELL
                side = self.last_sign
                if self.book.total_volume(side.opposite):
                    self.market(ts, side, self.volume(cfg.market_volume_mean))
            elif self.cancellable:
                self.cancel(ts, self.cancellable[rng.randrange(len(self.cancellable))])
        self.sweep(_ms(sweep_at))


def _poisson(rng: random.Random, lam: float) -> int:
    # Knuth; lam is a handful of shocks per day
    if lam <= 0:
        return 0
    limit, k, p = math.exp(-lam), 0, rng.random()
    while p > limit:
        k += 1
        p *= rng.random()
    return k


def generate_events(config: FlowConfig) -> list[Event]:
    config.validate()
    gen = _Generator(config)
    cal = config.calendar()
    for day in range(config.days):
        gen.run_day(day, cal)
    return gen.events


def generate(config: FlowConfig, path: Union[str, Path, None] = None) -> str:
    """Generate a canonical event file; returns its text and writes it if ``path``."""
    text = "".join(serialize_events(generate_events(config)))
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def calibrate_report(events: Iterable[Event], config: Optional[FlowConfig] = None,
                     calendar: Optional[TradingCalendar] = None):
    """Measure the scale table on ``events`` and check each row against its band.

    Returns :class:`lobkit.scales.ScaleRow` objects for the eight statistics
    that have target bands; ``within`` is ``None`` for rows without data.
    """
    from lobkit.scales import measure_scales

    config = config or FlowConfig()
    calendar = calendar or config.calendar()
    rows = measure_scales(events, calendar)
    out = []
    for row in rows:
        band = config.targets.get(row.name)
        if band is None:
            continue
        out.append(dataclasses.replace(
            row, target=band,
            within=None if row.value is None else band[0] <= row.value <= band[1]))
    return out
