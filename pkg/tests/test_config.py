import datetime as dt
from decimal import Decimal
from pathlib import Path

import pytest

from fxfix.config import ConfigError, from_dict, load_config

ROOT = Path(__file__).resolve().parents[1]


@pytest.mark.parametrize("name", ["compression.yaml", "random_walk.yaml"])
def test_shipped_configs_load(name):
    cfg = load_config(ROOT / "configs" / name)
    assert cfg.scenario is not None
    assert cfg.output.is_absolute()


def test_defaults_surface_documented_knobs():
    cfg = load_config(ROOT / "configs" / "compression.yaml")
    pair = cfg.pair("EURUSD")
    assert pair.trade_threshold == 31 and pair.quality_window == 20
    assert pair.standard_spread == Decimal("0.00002")
    assert cfg.scenario.manipulation_lead_ms == 100
    assert (cfg.analysis.spike_window, cfg.analysis.spike_z) == (30, 4.0)


def test_fix_time_forms():
    for raw in ("16:00", 960, "16:00:00"):  # bare 16:00 in YAML 1.1 is the integer 960
        assert from_dict({"pairs": [{"fix_time": raw}]}).pairs[0].fix_time == dt.time(16, 0)


def test_relative_paths_resolve_against_config(tmp_path):
    (tmp_path / "c.yaml").write_text("inputs: {bars: data/b.csv}\noutput: out\n")
    cfg = load_config(tmp_path / "c.yaml")
    assert cfg.bars == (tmp_path / "data" / "b.csv").resolve()
    assert cfg.output == (tmp_path / "out").resolve()


def test_exponent_strings_become_floats():
    assert from_dict({"scenario": {"impact": "2e-6"}}).scenario.impact == 2e-6


@pytest.mark.parametrize(
    "data",
    [
        {"nonsense": 1},
        {"pairs": []},
        {"pairs": [{"pair": "X", "colour": "red"}]},
        {"pairs": [{"methodology": "2030"}]},
        {"scenario": {"preset": "chaos"}},
        {"scenario": {"tick_rate": -1}},
        {"period": "mid"},
        {"workers": 0},
        [1, 2],
    ],
)
def test_invalid_configs(data):
    with pytest.raises(ConfigError):
        from_dict(data)


def test_unknown_pair():
    with pytest.raises(ConfigError):
        from_dict({}).pair("USDJPY")
