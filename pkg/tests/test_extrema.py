import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from fxfix.extrema import (
    HOURS,
    DomainError,
    build_surface,
    daily_global_extremum,
    delta_r,
    period_returns,
    read_surfaces_csv,
    two_sample_pvalue,
    write_surfaces_csv,
)
from fxfix.ingestion import Dataset


def _day(close, high=None, low=None):
    close = np.asarray(close, dtype=float)
    high = close if high is None else high
    low = close if low is None else low
    return np.stack([close, high, low, close], axis=-1)


def _random_day(rng):
    close = 1.3 * np.exp(np.cumsum(rng.normal(0, 1e-4, 1440)))
    wig = np.abs(rng.normal(0, 5e-5, 1440))
    return _day(close, close + wig, close - wig)


def test_constant_prices_zero():
    s = np.full(1440, 1.2)
    assert np.all(period_returns(s, 960, 10, "int1") == 0)
    assert delta_r(_day(s), 960, 10, "int2") == 0


def test_period_return_formula():
    s = np.full(1440, 1.0)
    s[960] = 1.001
    r = period_returns(s, 960, 5, "int1")
    assert len(r) == 5 and r[-1] == pytest.approx(1e-3, rel=1e-12)


def test_period_return_bounds():
    with pytest.raises(DomainError):
        period_returns(np.ones(1440), 10, 20, "int1")
    with pytest.raises(DomainError):
        period_returns(np.ones(1440), 1430, 20, "int2")
    with pytest.raises(DomainError):
        period_returns(np.ones(1440), 600, 0, "int1")


def test_delta_r_subtraction():
    s = np.full(1440, 1.0)
    high, low = s.copy(), s.copy()
    high[962], low[964] = 1.0002, 0.9999
    assert delta_r(_day(s, high, low), 960, 5, "int2") == pytest.approx(3e-4, rel=1e-9)


def test_jump_before_fix_picks_16():
    s = np.full(1440, 1.0)
    s[958:] = 1.01
    assert daily_global_extremum(_day(s), 5, "int1", "max") == 16


def test_flat_day_ties_to_earliest():
    assert daily_global_extremum(_day(np.full(1440, 1.0)), 5, "int1", "max") == 2


def test_randomized_day_matches_exhaustive_search():
    rng = np.random.default_rng(8)
    for _ in range(20):
        day = _random_day(rng)
        rows = day.tolist()
        for side in ("int1", "int2"):
            for kind in ("max", "min", "delta"):
                for dt_ in (1, 7, 59):
                    assert daily_global_extremum(day, dt_, side, kind) == oracles.global_extremum(
                        rows, dt_, side, kind, 3, HOURS
                    )
        r = period_returns(day[:, 3], 1200, 9, "int2")
        assert r.tolist() == [day[m, 3] / day[1200, 3] - 1.0 for m in range(1201, 1210)]


def _dataset(days):
    return Dataset("X", [dt.date(2014, 1, 6) + dt.timedelta(days=i) for i in range(len(days))], np.stack(days))


def test_single_day_surface_one_hot():
    ds = _dataset([_random_day(np.random.default_rng(2))])
    s = build_surface(ds, "int1", "max")
    assert np.all(s.probabilities.sum(axis=1) == 1)
    assert set(np.unique(s.probabilities)) == {0.0, 1.0}


def test_surface_agrees_with_per_day_search():
    rng = np.random.default_rng(4)
    days = [_random_day(rng) for _ in range(15)]
    ds = _dataset(days)
    for kind in ("max", "min", "delta"):
        s = build_surface(ds, "int2", kind, delta_ts=(1, 13))
        for dt_ in (1, 13):
            expected = np.bincount(
                [HOURS.index(daily_global_extremum(d, dt_, "int2", kind)) for d in days], minlength=len(HOURS)
            )
            assert np.array_equal(s.counts[s.delta_ts.index(dt_)], expected)
            assert s.counts[s.delta_ts.index(dt_)].sum() == len(days)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_delta_r_nonnegative(seed):
    day = _random_day(np.random.default_rng(seed))
    for dt_ in (1, 5, 30):
        for h in (3, 16, 22):
            assert delta_r(day, 60 * h, dt_, "int1") >= 0
            assert delta_r(day, 60 * h, dt_, "int2") >= 0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 3.0, 100.0]))
def test_surface_scale_invariant(seed, scale):
    rng = np.random.default_rng(seed)
    days = [_random_day(rng) for _ in range(8)]
    a = build_surface(_dataset(days), "int1", "max", delta_ts=(1, 4, 30))
    b = build_surface(_dataset([d * scale for d in days]), "int1", "max", delta_ts=(1, 4, 30))
    assert np.array_equal(a.counts, b.counts)


def test_int1_int2_rows_homogeneous_on_random_walk(random_walk_2000):
    a = build_surface(random_walk_2000, "int1", "max", delta_ts=(10,))
    b = build_surface(random_walk_2000, "int2", "max", delta_ts=(10,))
    assert two_sample_pvalue(a, b, 10) > 0.01


def test_surfaces_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    s = build_surface(_dataset([_random_day(rng) for _ in range(3)]), "int2", "delta", delta_ts=(2, 3))
    write_surfaces_csv(tmp_path / "s.csv", [s])
    back = read_surfaces_csv(tmp_path / "s.csv")[("int2", "delta", "close")]
    assert back == {(h, d): s.prob(h, d) for h in s.hours for d in s.delta_ts}
