"""Shared vocabulary: ticks, bars, pair configuration, fix windows and London time."""
from __future__ import annotations

import calendar
import datetime as dt
import math
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Literal, Optional, Union

MS_PER_SECOND = 1_000
MS_PER_MINUTE = 60_000
MS_PER_DAY = 86_400_000
MINUTES_PER_DAY = 1440

_EPOCH = dt.date(1970, 1, 1)

CurrencyClass = Literal["trade", "quote"]
Methodology = Literal["pre2015", "post2015"]


def _to_decimal(value) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, float):
        # floats go through repr so 1.3 becomes Decimal("1.3"), not its binary expansion
        return Decimal(repr(value))
    return Decimal(value)


@dataclass(frozen=True)
class Quote:
    timestamp: int
    bid: Decimal
    ask: Decimal
    source: str = "primary"

    def __post_init__(self) -> None:
        object.__setattr__(self, "bid", _to_decimal(self.bid))
        object.__setattr__(self, "ask", _to_decimal(self.ask))
        if self.bid <= 0 or self.ask <= 0:
            raise ValueError(f"quote prices must be positive, got bid={self.bid} ask={self.ask}")

    @property
    def crossed(self) -> bool:
        return self.ask < self.bid

    @property
    def spread(self) -> Decimal:
        return self.ask - self.bid


@dataclass(frozen=True)
class Trade:
    timestamp: int
    price: Decimal
    source: str = "primary"

    def __post_init__(self) -> None:
        object.__setattr__(self, "price", _to_decimal(self.price))
        if self.price <= 0:
            raise ValueError(f"trade price must be positive, got {self.price}")


Tick = Union[Quote, Trade]


@dataclass(frozen=True)
class MinuteBar:
    date: dt.date
    minute: int
    open: float
    high: float
    low: float
    close: float

    def __post_init__(self) -> None:
        if not 0 <= self.minute < MINUTES_PER_DAY:
            raise ValueError(f"minute index {self.minute} outside 0..1439")
        if min(self.open, self.high, self.low, self.close) <= 0:
            raise ValueError("bar prices must be positive")
        if not (self.low <= self.open <= self.high and self.low <= self.close <= self.high):
            raise ValueError(
                f"inconsistent bar: open={self.open} high={self.high} low={self.low} close={self.close}"
            )


@dataclass(frozen=True)
class PairConfig:
    """Per-pair fixing parameters.

    ``min_trade_intervals=None`` resolves to half the sampling intervals,
    rounded up (31 of 61). ``quality_tolerance`` is a fraction of the
    reference level. ``post2015_sample_ms`` keeps 1-s sampling across the
    widened trade window unless overridden.
    """

    pair: str = "EURUSD"
    currency_class: CurrencyClass = "trade"
    standard_spread: Decimal = Decimal("0.00002")
    sources: tuple[str, ...] = ("primary",)
    fix_time: dt.time = dt.time(16, 0)
    methodology: Methodology = "pre2015"
    min_trade_intervals: Optional[int] = None
    quality_tolerance: float = 0.01
    quality_window: int = 20
    tick_size: Decimal = Decimal("0.00001")
    post2015_sample_ms: int = MS_PER_SECOND

    def __post_init__(self) -> None:
        object.__setattr__(self, "standard_spread", _to_decimal(self.standard_spread))
        object.__setattr__(self, "tick_size", _to_decimal(self.tick_size))
        object.__setattr__(self, "sources", tuple(self.sources))
        if self.currency_class not in ("trade", "quote"):
            raise ValueError(f"unknown currency class {self.currency_class!r}")
        if self.methodology not in ("pre2015", "post2015"):
            raise ValueError(f"unknown methodology {self.methodology!r}")
        if self.standard_spread <= 0:
            raise ValueError("standard_spread must be positive")
        if self.tick_size <= 0:
            raise ValueError("tick_size must be positive")
        if not self.sources:
            raise ValueError("at least one source is required")
        if self.quality_tolerance <= 0:
            raise ValueError("quality_tolerance must be positive")
        n = self.window_shape()[2]
        if self.min_trade_intervals is not None and not 0 <= self.min_trade_intervals <= n:
            raise ValueError(f"min_trade_intervals must lie in [0, {n}]")

    def window_shape(self) -> tuple[int, int, int]:
        """(half_width_ms, sample_period_ms, sample_count) for this pair."""
        if self.methodology == "post2015":
            half = 150 * MS_PER_SECOND
            period = self.post2015_sample_ms if self.currency_class == "trade" else 15 * MS_PER_SECOND
        elif self.currency_class == "trade":
            half, period = 30 * MS_PER_SECOND, MS_PER_SECOND
        else:
            half, period = 60 * MS_PER_SECOND, 15 * MS_PER_SECOND
        return half, period, 2 * half // period + 1

    @property
    def trade_threshold(self) -> int:
        if self.min_trade_intervals is not None:
            return self.min_trade_intervals
        return math.ceil(self.window_shape()[2] / 2)

    def window(self, center: int) -> "FixWindow":
        half, period, _ = self.window_shape()
        return FixWindow(center=center, half_width=half, sample_period=period)


@dataclass(frozen=True)
class FixWindow:
    center: int
    half_width: int
    sample_period: int
    _ends: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.sample_period <= 0 or self.half_width < 0:
            raise ValueError("sample_period must be positive and half_width non-negative")
        if self.half_width % self.sample_period:
            raise ValueError("half_width must be an integer multiple of sample_period")
        start = self.center - self.half_width
        ends = tuple(start + i * self.sample_period for i in range(self.n_samples))
        object.__setattr__(self, "_ends", ends)

    @property
    def n_samples(self) -> int:
        return 2 * self.half_width // self.sample_period + 1

    @property
    def interval_ends(self) -> tuple[int, ...]:
        """Right edges; interval i covers (end_i - sample_period, end_i]."""
        return self._ends

    @property
    def start(self) -> int:
        """Exclusive lower bound of the first sampling interval."""
        return self._ends[0] - self.sample_period

    @property
    def end(self) -> int:
        return self._ends[-1]


def _last_sunday(year: int, month: int) -> dt.date:
    last = dt.date(year, month, calendar.monthrange(year, month)[1])
    return last - dt.timedelta(days=(last.weekday() - 6) % 7)


def london_offset(date: dt.date) -> int:
    """Hours London is ahead of GMT on ``date`` (0 or 1)."""
    start = _last_sunday(date.year, 3)
    stop = _last_sunday(date.year, 10)
    return 1 if start <= date < stop else 0


def local_to_utc_ms(date: dt.date, seconds_of_day: float = 0.0) -> int:
    """UTC epoch milliseconds for a London wall-clock time on ``date``."""
    days = (date - _EPOCH).days
    return days * MS_PER_DAY + round(seconds_of_day * MS_PER_SECOND) - london_offset(date) * 3_600_000


def utc_ms_to_local(ts: int) -> tuple[dt.date, int]:
    """London (date, millisecond-of-day) for a UTC timestamp.

    The offset is looked up on the UTC date; the two differ only inside the
    small hours of a changeover Sunday.
    """
    utc_date = _EPOCH + dt.timedelta(days=ts // MS_PER_DAY)
    local = ts + london_offset(utc_date) * 3_600_000
    return _EPOCH + dt.timedelta(days=local // MS_PER_DAY), local % MS_PER_DAY


def fix_center(date: dt.date, fix_time: dt.time = dt.time(16, 0)) -> int:
    seconds = fix_time.hour * 3600 + fix_time.minute * 60 + fix_time.second
    return local_to_utc_ms(date, seconds)


def minute_label(minute: int) -> str:
    return f"{minute // 60:02d}:{minute % 60:02d}"
