"""Brute-force reference implementations used by the tests.

They work on plain tuples and exact Fractions and share no code with the
package, so agreement is meaningful.
"""
from __future__ import annotations

import decimal
import statistics
from fractions import Fraction
from typing import Optional, Sequence

PREC = decimal.Context(prec=60)


def last_per_interval(events, start, period, n):
    """events: (timestamp, kind, payload); the latest event of each kind per interval."""
    quotes: list = [None] * n
    trades: list = [None] * n
    best_q = [None] * n
    best_t = [None] * n
    for ts, kind, payload in events:
        if not start < ts <= start + n * period:
            continue
        i = (ts - start - 1) // period
        if kind == "Q":
            if best_q[i] is None or ts >= best_q[i]:
                best_q[i], quotes[i] = ts, payload
        else:
            if best_t[i] is None or ts >= best_t[i]:
                best_t[i], trades[i] = ts, payload
    return quotes, trades


def trade_side(t: Fraction, bid: Fraction, ask: Fraction) -> Optional[str]:
    if not bid <= t <= ask:
        return None
    d_bid, d_ask = t - bid, ask - t
    if d_bid == 0:
        return "bid"
    if d_ask == 0:
        return "offer"
    if d_bid == d_ask:
        return None
    return "bid" if d_bid < d_ask else "offer"


def trade_fix(quotes: Sequence, trades: Sequence, standard_spread: Fraction, threshold: int):
    """Returns a dict of exact Fractions, or None if the quote path applies."""
    bid_set, offer_set = [], []
    for q, t in zip(quotes, trades):
        if q is None or t is None:
            continue
        bid, ask = q
        side = trade_side(t, bid, ask)
        if side == "bid":
            bid_set.append(t)
            offer_set.append(t + (ask - bid))
        elif side == "offer":
            offer_set.append(t)
            bid_set.append(t - (ask - bid))
    if not bid_set or len(bid_set) < threshold:
        return None
    mid = (statistics.median(bid_set) + statistics.median(offer_set)) / 2
    spreads = [a - b for b, a in (q for q in quotes if q is not None)]
    s_m = sum(spreads, Fraction(0)) / len(spreads)
    return {"mid": mid, "s_m": s_m, "spread": max(standard_spread, s_m), "n": len(bid_set)}


def quote_fix(quotes: Sequence):
    present = [q for q in quotes if q is not None]
    mb = statistics.median(b for b, _ in present)
    ma = statistics.median(a for _, a in present)
    return {"mid": (mb + ma) / 2, "spread": ma - mb}


def rounded(fr: Fraction) -> decimal.Decimal:
    """Correctly rounded 60-digit decimal of a fraction."""
    return PREC.divide(decimal.Decimal(fr.numerator), decimal.Decimal(fr.denominator))


def minute_bars(trades):
    """trades: (minute_key, price) in time order -> {key: (o, h, l, c)}."""
    out = {}
    for key, p in trades:
        if key not in out:
            out[key] = [p, p, p, p]
        else:
            bar = out[key]
            if p > bar[1]:
                bar[1] = p
            if p < bar[2]:
                bar[2] = p
            bar[3] = p
    return {k: tuple(v) for k, v in out.items()}


def centered_scan(series, half=20):
    """Exhaustive scan: list of (minute, kind, |R|)."""
    out = []
    n = len(series)
    for c in range(half, n - half):
        anchor = series[c - half]
        rs = [series[t] / anchor - 1.0 for t in range(c - half, c + half + 1)]
        rc = rs[half]
        others = rs[:half] + rs[half + 1 :]
        if all(rc > r for r in others):
            out.append((c, "max", abs(rc)))
        elif all(rc < r for r in others):
            out.append((c, "min", abs(rc)))
    return out


def global_extremum(day, delta_t, side, kind, stream_col, hours):
    """Exhaustive hour search with earliest-hour tie-break; day rows are (o, h, l, c)."""
    best_h, best_v = None, None
    for h in hours:
        t = 60 * h
        anchor = t - delta_t if side == "int1" else t
        pts = range(anchor + 1, anchor + delta_t + 1)
        if kind == "delta":
            ref = day[anchor][3]
            v = (max(day[m][1] for m in pts) - min(day[m][2] for m in pts)) / ref
        else:
            base = day[anchor][stream_col]
            rs = [day[m][stream_col] / base - 1.0 for m in pts]
            v = abs(max(rs)) if kind == "max" else abs(min(rs))
        if best_v is None or v > best_v:
            best_h, best_v = h, v
    return best_h
