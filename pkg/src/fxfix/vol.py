"""Per-minute realised volatility profile and spike detection."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .core import MINUTES_PER_DAY
from .ingestion import Dataset

# 252 business days of 24*60 minutes
ANNUALISATION = math.sqrt(252 * 24 * 60)
MAD_SCALE = 1.4826


class ReturnError(ArithmeticError):
    pass


@dataclass
class ReturnMatrix:
    """days x 1440 arithmetic returns; column t is the move from minute t-1 to t."""

    values: np.ndarray
    pair: str
    stream: str


@dataclass
class VolatilityProfile:
    sigma: np.ndarray
    sample_counts: np.ndarray


def minute_returns(dataset: Dataset, stream: str = "close", max_gap_days: int = 3) -> ReturnMatrix:
    """Minute-by-minute returns of one price stream.

    The first minute of a day is measured from the last minute of the
    preceding dataset day if that day is at most ``max_gap_days`` calendar
    days earlier (Friday to Monday); otherwise it is NaN.
    """
    prices = dataset.stream(stream)
    n_days = prices.shape[0]
    prev = np.full((n_days, MINUTES_PER_DAY), np.nan)
    prev[:, 1:] = prices[:, :-1]
    for d in range(1, n_days):
        if (dataset.dates[d] - dataset.dates[d - 1]).days <= max_gap_days:
            prev[d, 0] = prices[d - 1, -1]
    zero = prev == 0
    if zero.any():
        d, m = map(int, np.argwhere(zero)[0])
        src = (d, m - 1) if m else (d - 1, MINUTES_PER_DAY - 1)
        raise ReturnError(f"zero price at {dataset.dates[src[0]]} minute {src[1]} (return for minute {m})")
    values = (prices - prev) / prev
    return ReturnMatrix(values, dataset.pair, stream)


def vol_profile(matrix: ReturnMatrix, alpha: float = ANNUALISATION) -> VolatilityProfile:
    """Annualised sample standard deviation of each minute column."""
    values = matrix.values
    counts = np.sum(~np.isnan(values), axis=0)
    sigma = np.full(values.shape[1], np.nan)
    ok = counts >= 2
    if ok.any():
        sigma[ok] = np.nanstd(values[:, ok], axis=0, ddof=1) * alpha
    return VolatilityProfile(sigma, counts)


def detect_spikes(
    profile: VolatilityProfile, window_k: int = 30, z_threshold: float = 4.0
) -> list[tuple[int, float]]:
    """Minutes whose volatility stands out from their neighbourhood.

    The score of minute t is ``(sigma[t] - med) / (1.4826 * MAD)`` over the
    2k neighbours ``[t-k, t+k]`` without t. Minutes whose neighbourhood
    leaves the day or has a missing value are not scored. A zero MAD gives
    an infinite score for any minute above the median.
    """
    sigma = profile.sigma
    n = len(sigma)
    flagged = []
    for t in range(window_k, n - window_k):
        if np.isnan(sigma[t]):
            continue
        nb = np.concatenate((sigma[t - window_k : t], sigma[t + 1 : t + window_k + 1]))
        if np.isnan(nb).any():
            continue
        med = np.median(nb)
        mad = MAD_SCALE * np.median(np.abs(nb - med))
        diff = sigma[t] - med
        if mad > 0:
            z = diff / mad
        else:
            z = math.inf if diff > 0 else 0.0
        if z > z_threshold:
            flagged.append((t, float(z)))
    flagged.sort(key=lambda item: -item[1])
    return flagged


def write_profile_csv(path: Union[str, Path], profile: VolatilityProfile) -> int:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["minute", "sigma", "count"])
        for m, (s, c) in enumerate(zip(profile.sigma.tolist(), profile.sample_counts.tolist())):
            writer.writerow((m, "" if math.isnan(s) else repr(s), c))
    return len(profile.sigma)


def read_profile_csv(path: Union[str, Path]) -> VolatilityProfile:
    sigma, counts = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            sigma.append(float(row["sigma"]) if row["sigma"] else math.nan)
            counts.append(int(row["count"]))
    return VolatilityProfile(np.array(sigma), np.array(counts))


def write_spikes_csv(path: Union[str, Path], spikes: list[tuple[int, float]]) -> int:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["minute", "z"])
        for m, z in spikes:
            writer.writerow((m, repr(z)))
    return len(spikes)
