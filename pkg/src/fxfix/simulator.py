"""Synthetic tick market: random-walk mid, Poisson trades, fix-window compression.

Each day is generated independently from ``SeedSequence(seed, spawn_key=(day,))``
split into fixed child streams (walk, arrivals, sides, direction,
manipulation), so days can be produced in any order and switching the
manipulation on does not perturb the rest of the day.

Time inside a day is London wall-clock milliseconds. The regular quote for
second ``s`` is posted at ``s*1000 + 1`` and regular trades of that second
trade against it, so every sampling interval ``(e-1000, e]`` sees the quote
and trades of exactly one second.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Literal, Optional, Sequence

import numpy as np

from .core import MINUTES_PER_DAY, MS_PER_MINUTE, MinuteBar, Quote, Tick, Trade, local_to_utc_ms, utc_ms_to_local

SECONDS_PER_DAY = 86_400
_STREAMS = ("walk", "arrivals", "sides", "direction", "manipulation")


@dataclass(frozen=True)
class SimScenario:
    """Scenario knobs.

    ``step_vol`` is the per-second log-return standard deviation of the mid.
    ``base_spread`` is in price units and snapped to the tick grid.
    Inside the fixing flow window (``fix_time`` +/- ``flow_half_width_s``)
    the trade rate is multiplied by ``compression_factor`` and each trade is,
    with probability ``|flow_imbalance|``, a directional fixing trade; every
    directional trade moves the log mid permanently by ``impact``. With
    ``random_direction`` the day's direction is a fair coin, otherwise the
    sign of ``flow_imbalance``. After the window a ``reversion_fraction`` of
    the accumulated impact decays away with half-life ``reversion_halflife_s``.

    ``manipulation="end-of-interval"`` adds ``manipulation_size`` trades in
    the last ``manipulation_lead_ms`` of each 1-s sampling interval of the
    fixing window. Each one lifts (or hits) the book by
    ``manipulation_step_ticks`` and prints at the new touch; the book
    snaps back at the next regular quote.
    """

    seed: int = 0
    day_count: int = 250
    base_price: float = 1.3
    step_vol: float = 2e-5
    base_spread: float = 0.00002
    tick_rate: float = 0.5
    fix_time: dt.time = dt.time(16, 0)
    compression_factor: float = 1.0
    flow_imbalance: float = 0.0
    manipulation: Literal["off", "end-of-interval"] = "off"
    manipulation_size: int = 3
    manipulation_direction: int = 1
    manipulation_lead_ms: int = 100
    manipulation_step_ticks: int = 1
    impact: float = 0.0
    reversion_fraction: float = 0.0
    reversion_halflife_s: float = 300.0
    random_direction: bool = True
    flow_half_width_s: int = 30
    tick_size: Decimal = Decimal("0.00001")
    start_date: dt.date = dt.date(2010, 1, 4)
    pair: str = "EURUSD"
    source: str = "primary"

    def __post_init__(self) -> None:
        object.__setattr__(self, "tick_size", Decimal(str(self.tick_size)))
        if self.step_vol < 0:
            raise ValueError("step_vol must be non-negative")
        if self.tick_rate <= 0:
            raise ValueError("tick_rate must be positive")
        if abs(self.flow_imbalance) > 1:
            raise ValueError("flow_imbalance must lie in [-1, 1]")
        if self.compression_factor <= 0:
            raise ValueError("compression_factor must be positive")
        if self.manipulation not in ("off", "end-of-interval"):
            raise ValueError(f"unknown manipulation mode {self.manipulation!r}")
        if self.manipulation_direction not in (1, -1):
            raise ValueError("manipulation_direction must be +1 or -1")
        if not 0 < self.manipulation_lead_ms <= 1000:
            raise ValueError("manipulation_lead_ms must lie in (0, 1000]")
        if not 0 <= self.reversion_fraction <= 1 or self.reversion_halflife_s <= 0:
            raise ValueError("reversion_fraction must lie in [0, 1] and the half-life be positive")
        if self.base_price <= 0 or self.base_spread < 0:
            raise ValueError("base_price must be positive and base_spread non-negative")

    @property
    def fix_ms(self) -> int:
        t = self.fix_time
        return ((t.hour * 60 + t.minute) * 60 + t.second) * 1000


def random_walk_scenario(**overrides) -> SimScenario:
    return SimScenario(**overrides)


def compression_scenario(**overrides) -> SimScenario:
    """Fix-window order-flow compression.

    The window's directional flow moves the mid by about two one-minute
    standard deviations; half of that push fades over the following
    minutes, so the fix leaves a spike rather than a level shift.
    """
    params = dict(compression_factor=6.0, flow_imbalance=0.5, impact=3.5e-6, reversion_fraction=0.5)
    params.update(overrides)
    return SimScenario(**params)


def _tick_scale(tick_size: Decimal) -> tuple[int, int]:
    """(multiplier, decimals) with tick_size == multiplier / 10**decimals."""
    _, digits, exponent = tick_size.normalize().as_tuple()
    mult = int("".join(map(str, digits)))
    if exponent >= 0:
        return mult * 10**exponent, 0
    return mult, -exponent


def ticks_to_float(ticks: np.ndarray, tick_size: Decimal) -> np.ndarray:
    """Integer tick counts to floats, each equal to float() of its decimal string."""
    mult, dec = _tick_scale(tick_size)
    return (np.asarray(ticks, dtype=np.int64) * mult) / float(10**dec)


def day_date(start: dt.date, day_index: int) -> dt.date:
    d = np.busday_offset(np.datetime64(start, "D"), day_index, roll="forward")
    return d.astype(dt.date)


@dataclass
class DayTicks:
    """One simulated day in columnar form; prices are integer tick counts."""

    date: dt.date
    day_index: int
    tick_size: Decimal
    source: str
    quote_time: np.ndarray
    bid: np.ndarray
    ask: np.ndarray
    trade_time: np.ndarray
    trade_price: np.ndarray
    log_mid: np.ndarray = field(repr=False)
    direction: int = 0

    @property
    def midnight_utc(self) -> int:
        return local_to_utc_ms(self.date, 0)

    def to_ticks(self, start_ms: Optional[int] = None, end_ms: Optional[int] = None) -> list[Tick]:
        """Merged tick stream with UTC timestamps, quotes ahead of trades at equal times.

        ``start_ms``/``end_ms`` bound the London milliseconds of day (inclusive).
        """
        lo = 0 if start_ms is None else start_ms
        hi = SECONDS_PER_DAY * 1000 if end_ms is None else end_ms
        q0 = np.searchsorted(self.quote_time, lo, side="left")
        q1 = np.searchsorted(self.quote_time, hi, side="right")
        t0 = np.searchsorted(self.trade_time, lo, side="left")
        t1 = np.searchsorted(self.trade_time, hi, side="right")
        base = self.midnight_utc
        size = self.tick_size
        events: list[tuple[int, int, Tick]] = []
        for t, b, a in zip(self.quote_time[q0:q1].tolist(), self.bid[q0:q1].tolist(), self.ask[q0:q1].tolist()):
            events.append((t, 0, Quote(base + t, Decimal(b) * size, Decimal(a) * size, self.source)))
        for t, p in zip(self.trade_time[t0:t1].tolist(), self.trade_price[t0:t1].tolist()):
            events.append((t, 1, Trade(base + t, Decimal(p) * size, self.source)))
        events.sort(key=lambda e: (e[0], e[1]))
        return [e[2] for e in events]

    def bars(self) -> np.ndarray:
        """(1440, 4) open/high/low/close floats from trades; NaN rows for empty minutes."""
        return bars_from_trades(self.trade_time, ticks_to_float(self.trade_price, self.tick_size))

    def window_trade_count(self, start_ms: int, end_ms: int) -> int:
        lo, hi = np.searchsorted(self.trade_time, [start_ms, end_ms], side="right")
        return int(hi - lo)


def _streams(seed: int, day_index: int) -> dict[str, np.random.Generator]:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(day_index,))
    return {name: np.random.Generator(np.random.PCG64(child)) for name, child in zip(_STREAMS, ss.spawn(len(_STREAMS)))}


def gen_day(scenario: SimScenario, day_index: int) -> DayTicks:
    rngs = _streams(scenario.seed, day_index)
    n = SECONDS_PER_DAY
    fix_s = scenario.fix_ms // 1000
    w0 = max(fix_s - scenario.flow_half_width_s, 0)
    w1 = min(fix_s + scenario.flow_half_width_s, n)

    increments = rngs["walk"].standard_normal(n) * scenario.step_vol

    rate = np.full(n, scenario.tick_rate)
    rate[w0:w1] *= scenario.compression_factor
    counts = rngs["arrivals"].poisson(rate)
    trade_sec = np.repeat(np.arange(n, dtype=np.int64), counts)
    offsets = rngs["arrivals"].integers(2, 1000, size=trade_sec.size)
    trade_time = np.sort(trade_sec * 1000 + offsets)

    day_sign = 1 if scenario.flow_imbalance >= 0 else -1
    coin = rngs["direction"].random()
    direction = (1 if coin < 0.5 else -1) if scenario.random_direction else day_sign

    u_dir = rngs["sides"].random(trade_sec.size)
    u_side = rngs["sides"].random(trade_sec.size)
    sides = np.where(u_side < 0.5, 1, -1)
    in_window = (trade_sec >= w0) & (trade_sec < w1)
    directional = in_window & (u_dir < abs(scenario.flow_imbalance))
    sides = np.where(directional, direction, sides)

    flow = np.bincount(trade_sec[directional], minlength=n).astype(float) * direction
    log_mid = np.log(scenario.base_price) + np.concatenate(([0.0], np.cumsum(increments[:-1])))
    if scenario.impact and directional.any():
        pushed = np.concatenate(([0.0], scenario.impact * np.cumsum(flow)[:-1]))
        if scenario.reversion_fraction and w1 < n:
            elapsed = np.arange(n - w1)
            decay = 1 - scenario.reversion_fraction * (1 - 0.5 ** (elapsed / scenario.reversion_halflife_s))
            pushed[w1:] = pushed[w1] * decay
        log_mid += pushed

    size = float(scenario.tick_size)
    spread_ticks = int(round(scenario.base_spread / size))
    mid_ticks = np.exp(log_mid) / size
    bid = np.rint(mid_ticks - spread_ticks / 2).astype(np.int64)
    ask = bid + spread_ticks
    quote_time = np.arange(n, dtype=np.int64) * 1000 + 1

    trade_price = np.where(sides > 0, ask[trade_sec], bid[trade_sec])

    if scenario.manipulation == "end-of-interval" and scenario.manipulation_size > 0:
        quote_time, bid, ask, trade_time, trade_price = _manipulate(
            scenario, rngs["manipulation"], quote_time, bid, ask, trade_time, trade_price
        )

    return DayTicks(
        date=day_date(scenario.start_date, day_index),
        day_index=day_index,
        tick_size=scenario.tick_size,
        source=scenario.source,
        quote_time=quote_time,
        bid=bid,
        ask=ask,
        trade_time=trade_time,
        trade_price=trade_price,
        log_mid=log_mid,
        direction=direction,
    )


def _manipulate(scenario, rng, quote_time, bid, ask, trade_time, trade_price):
    sign = scenario.manipulation_direction
    step = scenario.manipulation_step_ticks * sign
    m = scenario.manipulation_size
    lead = scenario.manipulation_lead_ms
    ends = scenario.fix_ms + 1000 * np.arange(-30, 31)
    new_qt, new_bid, new_ask, new_tt, new_tp = [], [], [], [], []
    trade_price = trade_price.copy()
    for e in ends.tolist():
        s = e // 1000 - 1
        if not 0 <= s < SECONDS_PER_DAY:
            continue
        times = np.sort(e - rng.integers(0, lead, size=m))
        levels = np.arange(1, m + 1) * step
        qb, qa = bid[s] + levels, ask[s] + levels
        new_qt.append(times)
        new_bid.append(qb)
        new_ask.append(qa)
        new_tt.append(times)
        new_tp.append(qa if sign > 0 else qb)
        # regular trades later in the same interval trade against the lifted book
        lo = np.searchsorted(trade_time, times[0], side="left")
        hi = np.searchsorted(trade_time, e, side="right")
        if hi > lo:
            k = np.searchsorted(times, trade_time[lo:hi], side="right")
            trade_price[lo:hi] += k * step
    qt = np.concatenate([quote_time, *new_qt])
    qorder = np.argsort(qt, kind="stable")
    tt = np.concatenate([trade_time, *new_tt])
    torder = np.argsort(tt, kind="stable")
    return (
        qt[qorder],
        np.concatenate([bid, *new_bid])[qorder],
        np.concatenate([ask, *new_ask])[qorder],
        tt[torder],
        np.concatenate([trade_price, *new_tp])[torder],
    )


def bars_from_trades(local_ms: np.ndarray, prices: np.ndarray) -> np.ndarray:
    """Per-minute open/high/low/close of time-ordered trades within one day."""
    out = np.full((MINUTES_PER_DAY, 4), np.nan)
    if len(prices) == 0:
        return out
    minute = np.asarray(local_ms) // MS_PER_MINUTE
    starts = np.flatnonzero(np.r_[True, minute[1:] != minute[:-1]])
    ends = np.r_[starts[1:], len(minute)] - 1
    mins = minute[starts]
    out[mins, 0] = prices[starts]
    out[mins, 1] = np.maximum.reduceat(prices, starts)
    out[mins, 2] = np.minimum.reduceat(prices, starts)
    out[mins, 3] = prices[ends]
    return out


def ticks_to_bars(ticks: Sequence[Tick]) -> list[MinuteBar]:
    """Minute bars from the trades of a tick stream, keyed by London minute.

    Bar ``m`` spans ``[m, m+1)`` minutes of the London day; minutes without
    trades produce no bar.
    """
    bars: dict[tuple[dt.date, int], list[float]] = {}
    for tick in sorted((t for t in ticks if isinstance(t, Trade)), key=lambda t: t.timestamp):
        date, ms = utc_ms_to_local(tick.timestamp)
        p = float(tick.price)
        key = (date, ms // MS_PER_MINUTE)
        bar = bars.get(key)
        if bar is None:
            bars[key] = [p, p, p, p]
        else:
            bar[1] = max(bar[1], p)
            bar[2] = min(bar[2], p)
            bar[3] = p
    return [MinuteBar(d, m, *v) for (d, m), v in sorted(bars.items())]


def simulate_bars(scenario: SimScenario, days: Optional[int] = None) -> tuple[list[dt.date], np.ndarray]:
    """Dates and (days, 1440, 4) bar array for the first ``days`` scenario days."""
    count = scenario.day_count if days is None else days
    dates, arrays = [], []
    for d in range(count):
        day = gen_day(scenario, d)
        dates.append(day.date)
        arrays.append(day.bars())
    bars = np.stack(arrays) if arrays else np.empty((0, MINUTES_PER_DAY, 4))
    return dates, bars
