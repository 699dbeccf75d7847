"""CSV readers/writers for minute bars, ticks and external daily returns.

Bar CSV::

    date,time,open,high,low,close
    2012-05-03,15:59,1.2000,1.2004,1.1999,1.2002

Times are London wall-clock unless the file starts with a ``# tz=UTC`` line.
Tick CSV header is ``timestamp_ms,kind,bid,ask,price,source`` with kind Q or T.
"""
from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .core import MINUTES_PER_DAY, Quote, Tick, Trade, london_offset

log = logging.getLogger(__name__)

BAR_HEADER = ["date", "time", "open", "high", "low", "close"]
TICK_HEADER = ["timestamp_ms", "kind", "bid", "ask", "price", "source"]
STREAMS = {"open": 0, "high": 1, "low": 2, "close": 3}
PERIOD_SPLIT = dt.date(2013, 6, 1)

PathLike = Union[str, Path]
RawDayMap = dict[dt.date, dict[int, tuple[float, float, float, float]]]


class ParseError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


@dataclass
class Dataset:
    """Complete days of minute bars; ``bars[d, m]`` is (open, high, low, close)."""

    pair: str
    dates: list[dt.date]
    bars: np.ndarray
    period_tag: str = "full"
    excluded: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        self.bars = np.asarray(self.bars, dtype=float).reshape(len(self.dates), MINUTES_PER_DAY, 4)

    def __len__(self) -> int:
        return len(self.dates)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.pair == other.pair
            and self.dates == other.dates
            and self.period_tag == other.period_tag
            and np.array_equal(self.bars, other.bars)
        )

    def stream(self, name: str) -> np.ndarray:
        return self.bars[:, :, STREAMS[name]]

    def select(self, mask: Sequence[bool], period_tag: Optional[str] = None) -> "Dataset":
        mask = np.asarray(mask, dtype=bool)
        return Dataset(
            self.pair,
            [d for d, keep in zip(self.dates, mask) if keep],
            self.bars[mask] if len(self.dates) else self.bars,
            period_tag or self.period_tag,
        )


def _parse_time(text: str) -> int:
    hh, mm = text.split(":")[:2]
    minute = int(hh) * 60 + int(mm)
    if not 0 <= minute < MINUTES_PER_DAY:
        raise ValueError(f"time {text!r} out of range")
    return minute


def parse_bar_csv(path: PathLike) -> RawDayMap:
    """Read a bar CSV into ``{date: {minute: (open, high, low, close)}}``."""
    raw: RawDayMap = {}
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not any(line.strip() for line in lines):
        return raw
    utc = False
    start = 0
    while start < len(lines) and lines[start].lstrip().startswith("#"):
        if lines[start].lstrip("# ").replace(" ", "").lower() == "tz=utc":
            utc = True
        start += 1
    reader = csv.reader(lines[start:])
    header = next(reader, None)
    if header is None:
        return raw
    if [h.strip().lower() for h in header] != BAR_HEADER:
        raise ParseError(path, start + 1, f"expected header {','.join(BAR_HEADER)}")
    for offset, row in enumerate(reader):
        lineno = start + 2 + offset
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 6:
            raise ParseError(path, lineno, f"expected 6 fields, got {len(row)}")
        try:
            date = dt.date.fromisoformat(row[0].strip())
            minute = _parse_time(row[1].strip())
            o, h, lo, c = (float(x) for x in row[2:])
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        if not all(math.isfinite(v) and v > 0 for v in (o, h, lo, c)):
            raise ParseError(path, lineno, "prices must be positive")
        if not (lo <= o <= h and lo <= c <= h):
            raise ParseError(path, lineno, f"inconsistent bar low={lo} high={h} open={o} close={c}")
        if utc:
            shifted = minute + 60 * london_offset(date)
            date, minute = date + dt.timedelta(days=shifted // MINUTES_PER_DAY), shifted % MINUTES_PER_DAY
        day = raw.setdefault(date, {})
        if minute in day:
            raise ParseError(path, lineno, f"duplicate bar for {date} {minute // 60:02d}:{minute % 60:02d}")
        day[minute] = (o, h, lo, c)
    return raw


def filter_complete_days(raw: RawDayMap, pair: str = "") -> Dataset:
    """Keep only days with a bar for every one of the 1440 minutes."""
    dates, arrays = [], []
    excluded = 0
    for date in sorted(raw):
        day = raw[date]
        if not day:
            continue
        if len(day) != MINUTES_PER_DAY:
            excluded += 1
            continue
        dates.append(date)
        arrays.append([day[m] for m in range(MINUTES_PER_DAY)])
    if excluded:
        log.info("excluded %d incomplete day(s)", excluded)
    if not dates:
        log.warning("no complete days in dataset %s", pair or "<unnamed>")
    bars = np.array(arrays, dtype=float) if arrays else np.empty((0, MINUTES_PER_DAY, 4))
    return Dataset(pair, dates, bars, "full", excluded)


def split_periods(
    dataset: Dataset,
    boundary: dt.date = PERIOD_SPLIT,
    start: Optional[dt.date] = None,
    end: Optional[dt.date] = None,
) -> tuple[Dataset, Dataset]:
    """Split at ``boundary``: days before it go to pre, the rest to post.

    ``start``/``end`` optionally bound the two ranges; days outside them are dropped.
    """
    dates = dataset.dates
    pre = [(start is None or d >= start) and d < boundary for d in dates]
    post = [d >= boundary and (end is None or d <= end) for d in dates]
    return dataset.select(pre, "pre-2013-06"), dataset.select(post, "post-2013-06")


def write_bar_csv(path: PathLike, dataset: Dataset) -> int:
    """Write bars as a London-time bar CSV; returns the row count. NaN minutes are omitted."""
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BAR_HEADER)
        times = [f"{m // 60:02d}:{m % 60:02d}" for m in range(MINUTES_PER_DAY)]
        for date, day in zip(dataset.dates, dataset.bars):
            iso = date.isoformat()
            for m, (o, h, lo, c) in enumerate(day.tolist()):
                if math.isnan(o + h + lo + c):
                    continue  # minute without data: the day reads back as incomplete
                writer.writerow((iso, times[m], repr(o), repr(h), repr(lo), repr(c)))
                rows += 1
    return rows


def load_dataset(path: PathLike, pair: str = "") -> Dataset:
    return filter_complete_days(parse_bar_csv(path), pair)


def write_tick_csv(path: PathLike, ticks: Iterable[Tick], append: bool = False) -> int:
    rows = 0
    with open(path, "a" if append else "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if not append:
            writer.writerow(TICK_HEADER)
        for t in ticks:
            if isinstance(t, Quote):
                writer.writerow((t.timestamp, "Q", str(t.bid), str(t.ask), "", t.source))
            else:
                writer.writerow((t.timestamp, "T", "", "", str(t.price), t.source))
            rows += 1
    return rows


def parse_tick_csv(path: PathLike) -> list[Tick]:
    ticks: list[Tick] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return ticks
        if [h.strip().lower() for h in header] != TICK_HEADER:
            raise ParseError(path, 1, f"expected header {','.join(TICK_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise ParseError(path, lineno, f"expected 6 fields, got {len(row)}")
            ts, kind, bid, ask, price, source = (c.strip() for c in row)
            try:
                if kind == "Q":
                    ticks.append(Quote(int(ts), Decimal(bid), Decimal(ask), source))
                elif kind == "T":
                    ticks.append(Trade(int(ts), Decimal(price), source))
                else:
                    raise ValueError(f"unknown tick kind {kind!r}")
            except (ValueError, InvalidOperation) as exc:
                raise ParseError(path, lineno, str(exc) or "invalid number") from None
    return ticks


def parse_returns_csv(path: PathLike) -> dict[dt.date, float]:
    """External daily returns, header ``date,return``."""
    out: dict[dt.date, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return out
        if [h.strip().lower() for h in header] != ["date", "return"]:
            raise ParseError(path, 1, "expected header date,return")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out[dt.date.fromisoformat(row[0].strip())] = float(row[1])
            except (ValueError, IndexError) as exc:
                raise ParseError(path, lineno, str(exc)) from None
    return out
