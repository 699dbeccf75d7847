"""Benchmark fix computation from quote and trade ticks.

Trade currencies: the last quote and last trade of every sampling interval
are captured, each trade is classified against its interval's quotes, the
interval spread infers the opposite side, and the fix mid is the midpoint of
the bid-side and offer-side medians. Quote currencies (and trade currencies
with too few valid trades) use the medians of the sampled quotes instead.

All price arithmetic is done in ``Decimal`` so results are bit-stable.
"""
from __future__ import annotations

import bisect
import csv
import datetime as dt
import decimal
from collections import defaultdict
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Literal, Mapping, Optional, Sequence

from .core import FixWindow, PairConfig, Quote, Tick, Trade

Side = Literal["bid", "offer"]

QUALITY_SAMPLE_MS = 15_000
_CTX = decimal.Context(prec=60)
_TWO = Decimal(2)


class NoDataError(ValueError):
    """Raised when a window holds neither usable trades nor quotes."""


@dataclass(frozen=True)
class IntervalSnapshot:
    interval_index: int
    last_bid: Optional[Decimal] = None
    last_ask: Optional[Decimal] = None
    last_trade: Optional[Decimal] = None
    quote_time: Optional[int] = None

    def __post_init__(self) -> None:
        if (self.last_bid is None) != (self.last_ask is None):
            raise ValueError("bid and ask must be both present or both absent")

    @property
    def has_quote(self) -> bool:
        return self.last_bid is not None

    @property
    def spread(self) -> Optional[Decimal]:
        if self.last_bid is None:
            return None
        return self.last_ask - self.last_bid


@dataclass(frozen=True)
class ClassifiedTrade:
    side: Side
    actual_rate: Decimal
    inferred_rate: Decimal

    @property
    def bid_rate(self) -> Decimal:
        return self.actual_rate if self.side == "bid" else self.inferred_rate

    @property
    def offer_rate(self) -> Decimal:
        return self.inferred_rate if self.side == "bid" else self.actual_rate


@dataclass(frozen=True)
class FixResult:
    mid: Decimal
    fix_bid: Decimal
    fix_ask: Decimal
    spread_used: Decimal
    market_spread: Optional[Decimal]
    n_trade_points: int
    used_quote_fallback: bool
    source_used: str


def median(values: Iterable[Decimal]) -> Decimal:
    """Median; an even-sized set gives the mean of its two middle values."""
    ordered = sorted(values)
    if not ordered:
        raise NoDataError("median of an empty set")
    n = len(ordered)
    if n % 2:
        return ordered[n // 2]
    return _CTX.divide(_CTX.add(ordered[n // 2 - 1], ordered[n // 2]), _TWO)


def _mean(values: Sequence[Decimal]) -> Decimal:
    total = Decimal(0)
    for v in values:
        total = _CTX.add(total, v)
    return _CTX.divide(total, Decimal(len(values)))


def _ordered(ticks: Iterable[Tick]) -> list[Tick]:
    return sorted(ticks, key=lambda t: t.timestamp)


def quality_filter(ticks: Iterable[Tick], tolerance: float = 0.01, window: int = 20) -> list[Tick]:
    """Drop crossed quotes and ticks that stray from the market level.

    The market level is the rolling median of the last ``window`` trade rates
    sampled on 15-second boundaries. A tick is compared with the level of the
    latest boundary at or before it (the first level if it precedes every
    boundary); quotes are removed when either side is off by more than
    ``tolerance`` of the level.
    """
    ordered = _ordered(ticks)
    if not ordered:
        return []
    trades = [t for t in ordered if isinstance(t, Trade)]
    bounds: list[int] = []
    levels: list[Decimal] = []
    if trades:
        trade_ts = [t.timestamp for t in trades]
        first = -(-trades[0].timestamp // QUALITY_SAMPLE_MS) * QUALITY_SAMPLE_MS
        last = -(-ordered[-1].timestamp // QUALITY_SAMPLE_MS) * QUALITY_SAMPLE_MS
        samples: list[Decimal] = []
        for b in range(first, last + 1, QUALITY_SAMPLE_MS):
            samples.append(trades[bisect.bisect_right(trade_ts, b) - 1].price)
            bounds.append(b)
            levels.append(median(samples[-window:]))
    tol = Decimal(repr(float(tolerance)))

    def off(price: Decimal, level: Decimal) -> bool:
        return abs(price - level) > tol * level

    kept: list[Tick] = []
    for tick in ordered:
        if isinstance(tick, Quote) and tick.crossed:
            continue
        if levels:
            k = max(bisect.bisect_right(bounds, tick.timestamp) - 1, 0)
            level = levels[k]
            if isinstance(tick, Quote):
                if off(tick.bid, level) or off(tick.ask, level):
                    continue
            elif off(tick.price, level):
                continue
        kept.append(tick)
    return kept


def sample_intervals(ticks: Iterable[Tick], window: FixWindow) -> list[IntervalSnapshot]:
    n = window.n_samples
    bids: list[Optional[Decimal]] = [None] * n
    asks: list[Optional[Decimal]] = [None] * n
    trades: list[Optional[Decimal]] = [None] * n
    qtimes: list[Optional[int]] = [None] * n
    start, period = window.start, window.sample_period
    for tick in _ordered(ticks):
        if not start < tick.timestamp <= window.end:
            continue
        i = (tick.timestamp - start - 1) // period
        if isinstance(tick, Quote):
            bids[i], asks[i], qtimes[i] = tick.bid, tick.ask, tick.timestamp
        else:
            trades[i] = tick.price
    return [IntervalSnapshot(i, bids[i], asks[i], trades[i], qtimes[i]) for i in range(n)]


def classify_trade(trade_price: Decimal, bid: Decimal, ask: Decimal) -> Optional[Side]:
    """Side the trade hit, or None when it is excluded.

    Trades outside the touch are excluded. Trades strictly inside the spread go
    to the nearer side; the exact midpoint is excluded.
    """
    if trade_price < bid or trade_price > ask:
        return None
    if trade_price == bid:
        return "bid"
    if trade_price == ask:
        return "offer"
    to_bid = trade_price - bid
    to_ask = ask - trade_price
    if to_bid < to_ask:
        return "bid"
    if to_ask < to_bid:
        return "offer"
    return None


def infer_opposite(trade_price: Decimal, side: Side, spread: Decimal) -> ClassifiedTrade:
    if spread < 0:
        raise ValueError("spread must be non-negative")
    inferred = trade_price + spread if side == "bid" else trade_price - spread
    return ClassifiedTrade(side, trade_price, inferred)


def classify_snapshots(snapshots: Sequence[IntervalSnapshot]) -> list[ClassifiedTrade]:
    """Classified trades of every interval holding a trade and a quote pair."""
    out = []
    for snap in snapshots:
        if snap.last_trade is None or not snap.has_quote:
            continue
        side = classify_trade(snap.last_trade, snap.last_bid, snap.last_ask)
        if side is not None:
            out.append(infer_opposite(snap.last_trade, side, snap.spread))
    return out


def market_spread(snapshots: Sequence[IntervalSnapshot]) -> Optional[Decimal]:
    spreads = [s.spread for s in snapshots if s.has_quote]
    return _mean(spreads) if spreads else None


def _with_spread(mid: Decimal, spread: Decimal) -> tuple[Decimal, Decimal]:
    half = _CTX.divide(spread, _TWO)
    return _CTX.subtract(mid, half), _CTX.add(mid, half)


def compute_quote_fix(
    snapshots: Sequence[IntervalSnapshot], source: str = "primary", fallback: bool = False
) -> FixResult:
    quoted = [s for s in snapshots if s.has_quote]
    if not quoted:
        raise NoDataError("no quote data in fixing window")
    med_bid = median(s.last_bid for s in quoted)
    med_ask = median(s.last_ask for s in quoted)
    mid = _CTX.divide(_CTX.add(med_bid, med_ask), _TWO)
    spread = _CTX.subtract(med_ask, med_bid)
    fix_bid, fix_ask = _with_spread(mid, spread)
    return FixResult(
        mid=mid,
        fix_bid=fix_bid,
        fix_ask=fix_ask,
        spread_used=spread,
        market_spread=market_spread(snapshots),
        n_trade_points=0,
        used_quote_fallback=fallback,
        source_used=source,
    )


def compute_trade_fix(
    snapshots: Sequence[IntervalSnapshot], config: PairConfig, source: str = "primary"
) -> FixResult:
    classified = classify_snapshots(snapshots)
    if not classified or len(classified) < config.trade_threshold:
        try:
            return compute_quote_fix(snapshots, source=source, fallback=True)
        except NoDataError:
            raise NoDataError("no usable trades and no quotes in fixing window") from None
    med_bid = median(c.bid_rate for c in classified)
    med_offer = median(c.offer_rate for c in classified)
    mid = _CTX.divide(_CTX.add(med_bid, med_offer), _TWO)
    s_m = market_spread(snapshots)
    spread = max(config.standard_spread, s_m)
    fix_bid, fix_ask = _with_spread(mid, spread)
    return FixResult(
        mid=mid,
        fix_bid=fix_bid,
        fix_ask=fix_ask,
        spread_used=spread,
        market_spread=s_m,
        n_trade_points=len(classified),
        used_quote_fallback=False,
        source_used=source,
    )


def _quote_count(snapshots: Sequence[IntervalSnapshot]) -> int:
    return sum(1 for s in snapshots if s.has_quote)


def _last_quote_time(snapshots: Sequence[IntervalSnapshot]) -> int:
    return max((s.quote_time for s in snapshots if s.quote_time is not None), default=-1)


def select_source(
    per_source: Mapping[str, Sequence[IntervalSnapshot]],
    config: PairConfig,
    pooled: Optional[Sequence[IntervalSnapshot]] = None,
) -> FixResult:
    """Pick the fix across sources.

    The trade path runs on ``pooled`` when given, else on the primary
    source. If it lacks trades (or the pair is a quote currency) the source
    with the most valid quote snapshots is used. Ties average the per-source
    fixes, except that a single datapoint per tied source goes to the most
    recent quote update.
    """
    if not per_source and pooled is None:
        raise NoDataError("no sources supplied")
    if config.currency_class == "trade":
        if pooled is not None:
            trade_snaps, label = pooled, "pooled"
        else:
            label = config.sources[0] if config.sources[0] in per_source else next(iter(per_source))
            trade_snaps = per_source[label]
        classified = classify_snapshots(trade_snaps)
        if classified and len(classified) >= config.trade_threshold:
            return compute_trade_fix(trade_snaps, config, source=label)

    fallback = config.currency_class == "trade"
    counts = {src: _quote_count(snaps) for src, snaps in per_source.items()}
    best = max(counts.values(), default=0)
    if best == 0:
        raise NoDataError("no quote data in any source")
    tied = [src for src, c in counts.items() if c == best]
    if len(tied) > 1 and best == 1:
        tied = [max(tied, key=lambda src: _last_quote_time(per_source[src]))]
    if len(tied) == 1:
        return compute_quote_fix(per_source[tied[0]], source=tied[0], fallback=fallback)

    fixes = [compute_quote_fix(per_source[src], source=src, fallback=fallback) for src in tied]
    spreads = [f.market_spread for f in fixes if f.market_spread is not None]
    return FixResult(
        mid=_mean([f.mid for f in fixes]),
        fix_bid=_mean([f.fix_bid for f in fixes]),
        fix_ask=_mean([f.fix_ask for f in fixes]),
        spread_used=_mean([f.spread_used for f in fixes]),
        market_spread=_mean(spreads) if spreads else None,
        n_trade_points=0,
        used_quote_fallback=fallback,
        source_used="averaged",
    )


def compute_fix(ticks: Iterable[Tick], config: PairConfig, center: int) -> FixResult:
    """Full pipeline: quality filter, sampling, source selection.

    Ticks from sources not listed in ``config.sources`` are ignored. After
    2015 trade ticks of all sources are merged into one stream before
    sampling; before, the primary source is supplemented by the others only
    when it alone lacks valid trades.
    """
    window = config.window(center)
    wanted = set(config.sources)
    clean = quality_filter(
        (t for t in ticks if t.source in wanted),
        tolerance=config.quality_tolerance,
        window=config.quality_window,
    )
    by_source: dict[str, list[Tick]] = defaultdict(list)
    for tick in clean:
        by_source[tick.source].append(tick)
    per_source = {
        src: sample_intervals(by_source[src], window) for src in config.sources if src in by_source
    }
    if not per_source:
        raise NoDataError("no ticks in fixing window")

    pooled = None
    if config.currency_class == "trade" and len(per_source) > 1:
        primary = per_source.get(config.sources[0])
        primary_ok = primary is not None and len(classify_snapshots(primary)) >= max(
            config.trade_threshold, 1
        )
        if config.methodology == "post2015" or not primary_ok:
            pooled = sample_intervals(clean, window)
    return select_source(per_source, config, pooled=pooled)


FIX_HEADER = [
    "date",
    "pair",
    "mid",
    "fix_bid",
    "fix_ask",
    "spread_used",
    "market_spread",
    "n_trade_points",
    "used_quote_fallback",
    "source_used",
    "error",
]


def write_fix_csv(path, rows: Iterable[tuple]) -> int:
    """Write ``(date, pair, FixResult | error message)`` rows as a fix report."""
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIX_HEADER)
        for date, pair, res in rows:
            if isinstance(res, FixResult):
                writer.writerow(
                    (
                        date.isoformat(),
                        pair,
                        str(res.mid),
                        str(res.fix_bid),
                        str(res.fix_ask),
                        str(res.spread_used),
                        "" if res.market_spread is None else str(res.market_spread),
                        res.n_trade_points,
                        int(res.used_quote_fallback),
                        res.source_used,
                        "",
                    )
                )
            else:
                writer.writerow((date.isoformat(), pair, "", "", "", "", "", "", "", "", str(res)))
            count += 1
    return count


def read_fix_csv(path) -> list[tuple]:
    """Inverse of :func:`write_fix_csv`; failed days come back as their error text."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            date = dt.date.fromisoformat(row["date"])
            if row["error"]:
                out.append((date, row["pair"], row["error"]))
                continue
            res = FixResult(
                mid=Decimal(row["mid"]),
                fix_bid=Decimal(row["fix_bid"]),
                fix_ask=Decimal(row["fix_ask"]),
                spread_used=Decimal(row["spread_used"]),
                market_spread=Decimal(row["market_spread"]) if row["market_spread"] else None,
                n_trade_points=int(row["n_trade_points"]),
                used_quote_fallback=bool(int(row["used_quote_fallback"])),
                source_used=row["source_used"],
            )
            out.append((date, row["pair"], res))
    return out
