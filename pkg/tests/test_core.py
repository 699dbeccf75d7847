import datetime as dt
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fxfix.core import (
    FixWindow,
    MinuteBar,
    PairConfig,
    Quote,
    Trade,
    fix_center,
    local_to_utc_ms,
    london_offset,
    minute_label,
    utc_ms_to_local,
)


@pytest.mark.parametrize(
    "date,offset",
    [
        (dt.date(2013, 7, 1), 1),
        (dt.date(2013, 1, 15), 0),
        (dt.date(2013, 3, 31), 1),
        (dt.date(2013, 3, 30), 0),
        (dt.date(2013, 10, 26), 1),
        (dt.date(2013, 10, 27), 0),
    ],
)
def test_london_offset(date, offset):
    assert london_offset(date) == offset


@pytest.mark.parametrize(
    "kw,n",
    [
        ({}, 61),
        ({"currency_class": "quote"}, 9),
        ({"methodology": "post2015"}, 301),
        ({"methodology": "post2015", "currency_class": "quote"}, 21),
    ],
)
def test_window_sample_counts(kw, n):
    cfg = PairConfig(**kw)
    win = cfg.window(0)
    assert win.n_samples == n == len(win.interval_ends)
    assert win.interval_ends[n // 2] == 0


def test_default_threshold_is_half_rounded_up():
    assert PairConfig().trade_threshold == 31
    assert PairConfig(min_trade_intervals=5).trade_threshold == 5


def test_window_rejects_misaligned_sampling():
    with pytest.raises(ValueError):
        FixWindow(center=0, half_width=1500, sample_period=1000)


def test_fix_center_summer_and_winter():
    summer = fix_center(dt.date(2013, 7, 1))
    assert summer == int(dt.datetime(2013, 7, 1, 15, tzinfo=dt.timezone.utc).timestamp() * 1000)
    winter = fix_center(dt.date(2013, 1, 15))
    assert winter == int(dt.datetime(2013, 1, 15, 16, tzinfo=dt.timezone.utc).timestamp() * 1000)


@given(st.dates(dt.date(2000, 1, 1), dt.date(2030, 12, 31)), st.integers(3 * 3600 * 1000, 23 * 3600 * 1000 - 1))
def test_local_utc_round_trip(date, ms):
    assert utc_ms_to_local(local_to_utc_ms(date, ms / 1000)) == (date, ms)


def test_price_types_validate():
    with pytest.raises(ValueError):
        Quote(0, Decimal("-1"), Decimal("1"))
    with pytest.raises(ValueError):
        Trade(0, Decimal("0"))
    with pytest.raises(ValueError):
        MinuteBar(dt.date(2013, 1, 1), 0, 1.0, 0.9, 1.1, 1.0)
    assert Quote(0, Decimal("1.2"), Decimal("1.1")).crossed
    assert minute_label(959) == "15:59"
