from __future__ import annotations

import datetime as dt
import random
import sys
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fxfix.core import FixWindow, Quote, Trade  # noqa: E402
from fxfix.ingestion import Dataset  # noqa: E402
from fxfix.simulator import compression_scenario, random_walk_scenario, simulate_bars  # noqa: E402

ACCEPTANCE_LINES: list[str] = []

TICK = Decimal("0.0001")


def random_tick_case(rng: random.Random, n: int = 61, period: int = 1000, center: int = 10_000_000):
    """Random ticks over an n-interval window with unique timestamps.

    Returns (window, ticks, events) where events are plain tuples for the
    oracles: (ts, "Q", (bid, ask)) or (ts, "T", price) with Fraction prices.
    """
    window = FixWindow(center=center, half_width=(n - 1) // 2 * period, sample_period=period)
    base = rng.randint(10_000, 14_000)
    p_quote = rng.choice((0.5, 0.9, 1.0))
    p_trade = rng.choice((0.3, 0.7, 0.95))
    ticks, events = [], []
    for end in window.interval_ends:
        times = sorted(rng.sample(range(end - period + 1, end + 1), 4))
        bid = ask = None
        for ts in times[: rng.randint(1, 2)] if rng.random() < p_quote else []:
            bid = base + rng.randint(-4, 4)
            ask = bid + rng.randint(0, 3)
            ticks.append(Quote(ts, TICK * bid, TICK * ask))
            events.append((ts, "Q", (Fraction(bid, 10_000), Fraction(ask, 10_000))))
        for ts in times[2 : 2 + rng.randint(1, 2)] if rng.random() < p_trade else []:
            ref = base if bid is None else rng.choice((bid, bid, ask, ask, (bid + ask) // 2))
            px = ref + (rng.choice((-1, 1)) if rng.random() < 0.15 else 0)
            ticks.append(Trade(ts, TICK * px))
            events.append((ts, "T", Fraction(px, 10_000)))
    rng.shuffle(ticks)
    return window, ticks, events


def _dataset(scenario, days):
    dates, bars = simulate_bars(scenario, days)
    return Dataset(scenario.pair, dates, bars)


@pytest.fixture(scope="session")
def random_walk_2000():
    return _dataset(random_walk_scenario(seed=7), 2000)


@pytest.fixture(scope="session")
def compression_2000():
    return _dataset(compression_scenario(seed=11), 2000)


@pytest.fixture
def small_dataset():
    rng = np.random.default_rng(5)
    days = 12
    close = 1.3 * np.exp(np.cumsum(rng.normal(0, 1e-4, (days, 1440)), axis=1))
    spread = np.abs(rng.normal(0, 5e-5, (days, 1440)))
    bars = np.stack([close, close + spread, close - spread, close], axis=-1)
    dates = [dt.date(2013, 5, 27) + dt.timedelta(days=i) for i in range(days)]
    return Dataset("EURUSD", dates, bars)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
