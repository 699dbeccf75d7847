"""Extrema at the centre of a sliding symmetric window.

For every minute T with a full window, period returns are taken over
[T-20, T+20] relative to the price at T-20 (the anchor is part of the
window, with return 0). T records a maximum (minimum) event when its return
is the unique largest (smallest) in the window; the event size is |R(T)|.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Mapping, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import stats

from .core import MINUTES_PER_DAY
from .ingestion import Dataset

HALF_WIDTH = 20
BPT = 1e4
ALL_STREAMS = ("high", "low", "close")

Kind = Literal["max", "min"]


class InsufficientDataError(ValueError):
    pass


def _window_events(series: np.ndarray, half_width: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Boolean max/min event flags and |R| for centres half_width..1439-half_width."""
    windows = sliding_window_view(series, 2 * half_width + 1)
    r = windows / windows[:, :1] - 1.0
    centre = r[:, half_width]
    left, right = r[:, :half_width], r[:, half_width + 1 :]
    is_max = (centre > left.max(axis=1)) & (centre > right.max(axis=1))
    is_min = (centre < left.min(axis=1)) & (centre < right.min(axis=1))
    return is_max, is_min, np.abs(centre)


def centered_extrema(series: np.ndarray, half_width: int = HALF_WIDTH) -> list[tuple[int, str, float]]:
    """(minute, kind, |R|) for each window whose extremum sits exactly at its centre."""
    is_max, is_min, size = _window_events(np.asarray(series, dtype=float), half_width)
    out = []
    for k in np.flatnonzero(is_max | is_min).tolist():
        out.append((k + half_width, "max" if is_max[k] else "min", float(size[k])))
    return out


def combine_streams(means: Sequence[float], errors: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean of per-stream values with Gaussian error propagation."""
    k = len(means)
    if k == 0:
        return math.nan, math.nan
    return float(np.mean(means)), float(math.sqrt(sum(e * e for e in errors)) / k)


@dataclass
class StreamEvents:
    counts: dict[str, np.ndarray]
    mean_bpt: dict[str, np.ndarray]
    stderr_bpt: dict[str, np.ndarray]


@dataclass
class CenteredHistogram:
    day_count: int
    streams: tuple[str, ...]
    count_max: np.ndarray
    count_min: np.ndarray
    size_mean_max: np.ndarray
    size_mean_min: np.ndarray
    size_stderr_max: np.ndarray
    size_stderr_min: np.ndarray
    per_stream: dict[str, StreamEvents] = field(default_factory=dict, repr=False)

    @property
    def trials(self) -> int:
        """Day-stream pairs behind each minute's count."""
        return self.day_count * len(self.streams)

    @property
    def prob_max(self) -> np.ndarray:
        return self.count_max / self.trials if self.trials else np.zeros(MINUTES_PER_DAY)

    @property
    def prob_min(self) -> np.ndarray:
        return self.count_min / self.trials if self.trials else np.zeros(MINUTES_PER_DAY)

    @property
    def prob_any(self) -> np.ndarray:
        return self.prob_max + self.prob_min


def _stream_events(prices: np.ndarray, half_width: int) -> StreamEvents:
    counts, means, errs = {}, {}, {}
    minutes_all, sizes_all = {"max": [], "min": []}, {"max": [], "min": []}
    for day in prices:
        is_max, is_min, size = _window_events(day, half_width)
        for kind, flags in (("max", is_max), ("min", is_min)):
            idx = np.flatnonzero(flags)
            minutes_all[kind].append(idx + half_width)
            sizes_all[kind].append(size[idx] * BPT)
    for kind in ("max", "min"):
        mins = np.concatenate(minutes_all[kind]) if minutes_all[kind] else np.empty(0, dtype=int)
        sizes = np.concatenate(sizes_all[kind]) if sizes_all[kind] else np.empty(0)
        n = np.bincount(mins, minlength=MINUTES_PER_DAY)
        total = np.bincount(mins, weights=sizes, minlength=MINUTES_PER_DAY)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(n > 0, total / n, np.nan)
            ss = np.bincount(mins, weights=(sizes - mean[mins]) ** 2, minlength=MINUTES_PER_DAY)
            stderr = np.where(n > 1, np.sqrt(ss / np.maximum(n - 1, 1)) / np.sqrt(n), np.nan)
        counts[kind], means[kind], errs[kind] = n, mean, stderr
    return StreamEvents(counts, means, errs)


def aggregate(
    dataset: Dataset, streams: Sequence[str] = ALL_STREAMS, half_width: int = HALF_WIDTH
) -> CenteredHistogram:
    """Event counts, probabilities and stream-averaged event sizes per minute.

    Per stream, the size of a minute is the mean |R| in basis points with its
    standard error; streams are then averaged and their errors combined as
    sqrt(sum e_i^2)/k over the k streams that saw events at that minute.
    A minute whose contributing streams lack a standard error (one event)
    has a NaN combined error.
    """
    streams = tuple(streams)
    per = {s: _stream_events(dataset.stream(s), half_width) for s in streams}
    out: dict[str, np.ndarray] = {}
    for kind in ("max", "min"):
        count = sum(per[s].counts[kind] for s in streams)
        means = np.stack([per[s].mean_bpt[kind] for s in streams])
        errs = np.stack([per[s].stderr_bpt[kind] for s in streams])
        present = ~np.isnan(means)
        k = present.sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(k > 0, np.nansum(means, axis=0) / k, np.nan)
            err_sq = np.where(present, errs**2, 0.0).sum(axis=0)
            err = np.where(k > 0, np.sqrt(err_sq) / k, np.nan)
        out[f"count_{kind}"] = count
        out[f"size_mean_{kind}"] = mean
        out[f"size_stderr_{kind}"] = err
    return CenteredHistogram(day_count=len(dataset), streams=streams, per_stream=per, **out)


def day_events(dataset: Dataset, minute: int, stream: str = "close", half_width: int = HALF_WIDTH):
    """(date, +1 for max / -1 for min) for days with a centred event at ``minute``."""
    events = []
    prices = dataset.stream(stream)
    for date, day in zip(dataset.dates, prices):
        lo = minute - half_width
        window = day[lo : minute + half_width + 1]
        if lo < 0 or len(window) != 2 * half_width + 1:
            raise ValueError(f"minute {minute} has no full window")
        is_max, is_min, _ = _window_events(window, half_width)
        if is_max[0]:
            events.append((date, 1))
        elif is_min[0]:
            events.append((date, -1))
    return events


@dataclass(frozen=True)
class CorrelationResult:
    correlation: float
    p_value: float
    n: int


def directional_correlation(
    events: Sequence[tuple[dt.date, int]],
    external: Mapping[dt.date, float],
    n_permutations: int = 10_000,
    seed: int = 0,
    min_overlap: int = 10,
) -> CorrelationResult:
    """Pearson correlation of event signs with the signs of an external daily
    return series, with a two-sided permutation p-value."""
    pairs = [(s, np.sign(external[d])) for d, s in events if d in external]
    if len(pairs) < min_overlap:
        raise InsufficientDataError(f"only {len(pairs)} overlapping dates, need {min_overlap}")
    x = np.array([p[0] for p in pairs], dtype=float)
    y = np.array([p[1] for p in pairs], dtype=float)
    n = len(x)
    if x.std() == 0 or y.std() == 0:
        return CorrelationResult(math.nan, 1.0, n)
    xz = (x - x.mean()) / x.std()
    yz = (y - y.mean()) / y.std()
    r = float(xz @ yz / n)
    rng = np.random.default_rng(seed)
    shuffled = rng.permuted(np.broadcast_to(yz, (n_permutations, n)), axis=1)
    r_perm = shuffled @ xz / n
    exceed = int(np.sum(np.abs(r_perm) >= abs(r) - 1e-12))
    return CorrelationResult(r, (exceed + 1) / (n_permutations + 1), n)


def parity_pvalue(n_max: int, n_min: int) -> float:
    """Two-sided binomial test of equal maximum and minimum counts."""
    total = n_max + n_min
    if total == 0:
        return 1.0
    return float(stats.binomtest(n_max, total, 0.5).pvalue)


HISTOGRAM_HEADER = ["minute", "kind", "count", "probability", "size_bpt", "stderr_bpt"]


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def write_histogram_csv(path: Union[str, Path], hist: CenteredHistogram) -> int:
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HISTOGRAM_HEADER)
        for kind in ("max", "min"):
            count = getattr(hist, f"count_{kind}")
            prob = getattr(hist, f"prob_{kind}")
            size = getattr(hist, f"size_mean_{kind}")
            err = getattr(hist, f"size_stderr_{kind}")
            for m in range(MINUTES_PER_DAY):
                writer.writerow((m, kind, int(count[m]), repr(float(prob[m])), _fmt(size[m]), _fmt(err[m])))
                rows += 1
    return rows


def read_histogram_csv(path: Union[str, Path]) -> dict[tuple[int, str], dict[str, float]]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[(int(row["minute"]), row["kind"])] = {
                "count": int(row["count"]),
                "probability": float(row["probability"]),
                "size_bpt": float(row["size_bpt"]) if row["size_bpt"] else math.nan,
                "stderr_bpt": float(row["stderr_bpt"]) if row["stderr_bpt"] else math.nan,
            }
    return out
