"""Probability surfaces of the daily most extreme period return.

For a fixing hour T and interval size dt, int1 looks at (T-dt, T] anchored at
the price of minute T-dt, int2 at (T, T+dt] anchored at minute T. The anchor
point itself is left out of the return series. For each day the hour whose
extreme period return is largest in absolute value wins; counting winners
over days and dividing by the day count gives one row of the surface.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence, Union

import numpy as np
from scipy import stats

from .core import MINUTES_PER_DAY
from .ingestion import STREAMS, Dataset

Side = Literal["int1", "int2"]
Kind = Literal["max", "min", "delta"]

HOURS = tuple(range(2, 24))
DELTA_TS = tuple(range(1, 60))


class DomainError(ValueError):
    pass


def _bounds(t_f: int, delta_t: int, side: str) -> tuple[int, int, int]:
    """(anchor, first, last) minute indices of a period interval."""
    if delta_t < 1:
        raise DomainError("interval size must be at least one minute")
    if side == "int1":
        anchor, first, last = t_f - delta_t, t_f - delta_t + 1, t_f
    elif side == "int2":
        anchor, first, last = t_f, t_f + 1, t_f + delta_t
    else:
        raise ValueError(f"unknown side {side!r}")
    if anchor < 0 or last >= MINUTES_PER_DAY:
        raise DomainError(f"interval {side} at minute {t_f} with size {delta_t} leaves the day")
    return anchor, first, last


def period_returns(series: np.ndarray, t_f: int, delta_t: int, side: Side) -> np.ndarray:
    """Returns of ``series`` over the interval relative to its anchor price."""
    anchor, first, last = _bounds(t_f, delta_t, side)
    return series[first : last + 1] / series[anchor] - 1.0


def delta_r(day: np.ndarray, t_f: int, delta_t: int, side: Side) -> float:
    """Spread between the highest-price maximum and the lowest-price minimum.

    ``day`` is a (1440, 4) bar array. Both extremes are taken relative to the
    close at the anchor minute, which keeps the result non-negative.
    """
    anchor, first, last = _bounds(t_f, delta_t, side)
    ref = day[anchor, STREAMS["close"]]
    hi = day[first : last + 1, STREAMS["high"]].max()
    lo = day[first : last + 1, STREAMS["low"]].min()
    return float((hi - lo) / ref)


def _measure(day: np.ndarray, t_f: int, delta_t: int, side: Side, kind: Kind, stream: str) -> float:
    if kind == "delta":
        return delta_r(day, t_f, delta_t, side)
    r = period_returns(day[:, STREAMS[stream]], t_f, delta_t, side)
    return abs(r.max() if kind == "max" else r.min())


def daily_global_extremum(
    day: np.ndarray,
    delta_t: int,
    side: Side,
    kind: Kind,
    stream: str = "close",
    hours: Sequence[int] = HOURS,
) -> int:
    """Hour with the largest absolute extreme period return; ties go to the earliest."""
    best_hour, best = hours[0], -1.0
    for h in hours:
        v = _measure(day, 60 * h, delta_t, side, kind, stream)
        if v > best:
            best_hour, best = h, v
    return best_hour


@dataclass
class ExtremaSurface:
    hours: tuple[int, ...]
    delta_ts: tuple[int, ...]
    counts: np.ndarray  # (len(delta_ts), len(hours))
    day_count: int
    side: str
    kind: str
    stream: str

    @property
    def probabilities(self) -> np.ndarray:
        if self.day_count == 0:
            return np.zeros(self.counts.shape)
        return self.counts / self.day_count

    def row(self, delta_t: int) -> np.ndarray:
        return self.probabilities[self.delta_ts.index(delta_t)]

    def prob(self, hour: int, delta_t: int) -> float:
        return float(self.row(delta_t)[self.hours.index(hour)])

    def uniformity_pvalue(self, delta_t: int) -> float:
        """Chi-square p-value of the winning-hour counts against a uniform spread."""
        return float(stats.chisquare(self.counts[self.delta_ts.index(delta_t)]).pvalue)


def _period_matrix(prices: np.ndarray, t_f: int, delta_t: int, side: Side) -> np.ndarray:
    anchor, first, last = _bounds(t_f, delta_t, side)
    return prices[:, first : last + 1] / prices[:, anchor : anchor + 1] - 1.0


def build_surface(
    dataset: Dataset,
    side: Side,
    kind: Kind,
    stream: str = "close",
    hours: Sequence[int] = HOURS,
    delta_ts: Sequence[int] = DELTA_TS,
) -> ExtremaSurface:
    hours, delta_ts = tuple(hours), tuple(delta_ts)
    n_days = len(dataset)
    counts = np.zeros((len(delta_ts), len(hours)), dtype=np.int64)
    if n_days:
        prices = dataset.stream(stream)
        close, high, low = dataset.stream("close"), dataset.stream("high"), dataset.stream("low")
        for j, dt_ in enumerate(delta_ts):
            vals = np.empty((n_days, len(hours)))
            for i, h in enumerate(hours):
                t_f = 60 * h
                if kind == "delta":
                    anchor, first, last = _bounds(t_f, dt_, side)
                    hi = high[:, first : last + 1].max(axis=1)
                    lo = low[:, first : last + 1].min(axis=1)
                    vals[:, i] = (hi - lo) / close[:, anchor]
                else:
                    r = _period_matrix(prices, t_f, dt_, side)
                    vals[:, i] = np.abs(r.max(axis=1) if kind == "max" else r.min(axis=1))
            # argmax returns the first maximum, i.e. the earliest hour on ties
            counts[j] = np.bincount(vals.argmax(axis=1), minlength=len(hours))
    return ExtremaSurface(hours, delta_ts, counts, n_days, side, kind, stream)


def two_sample_pvalue(a: ExtremaSurface, b: ExtremaSurface, delta_t: int) -> float:
    """Chi-square homogeneity test between two surfaces' rows at ``delta_t``."""
    table = np.vstack([a.counts[a.delta_ts.index(delta_t)], b.counts[b.delta_ts.index(delta_t)]])
    table = table[:, table.sum(axis=0) > 0]
    return float(stats.chi2_contingency(table).pvalue)


SURFACE_HEADER = ["hour", "delta_t", "side", "kind", "stream", "probability"]


def write_surfaces_csv(path: Union[str, Path], surfaces: Sequence[ExtremaSurface]) -> int:
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SURFACE_HEADER)
        for s in surfaces:
            probs = s.probabilities
            for j, dt_ in enumerate(s.delta_ts):
                for i, h in enumerate(s.hours):
                    writer.writerow((h, dt_, s.side, s.kind, s.stream, repr(float(probs[j, i]))))
                    rows += 1
    return rows


def read_surfaces_csv(path: Union[str, Path]) -> dict[tuple[str, str, str], dict[tuple[int, int], float]]:
    """Probabilities keyed by (side, kind, stream) then (hour, delta_t)."""
    out: dict[tuple[str, str, str], dict[tuple[int, int], float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (row["side"], row["kind"], row["stream"])
            out.setdefault(key, {})[(int(row["hour"]), int(row["delta_t"]))] = float(row["probability"])
    return out
