import json
from decimal import Decimal
from pathlib import Path

import pytest
import yaml

from fxfix.cli import main
from fxfix.fix import read_fix_csv
from fxfix.ingestion import load_dataset, parse_tick_csv
from fxfix.extrema import read_surfaces_csv
from fxfix.centered import read_histogram_csv
from fxfix.vol import read_profile_csv


def _config(tmp_path, **sections):
    data = {"output": str(tmp_path / "runs"), **sections}
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


def _last_run(tmp_path, sub):
    return sorted((tmp_path / "runs").glob(f"{sub}-*"))[-1]


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) != 0
    assert "usage" in capsys.readouterr().err


def test_zero_vol_simulate_then_fix(tmp_path):
    cfg = _config(tmp_path, scenario={"preset": "random_walk", "step_vol": 0.0, "day_count": 4, "base_price": 1.25})
    assert main(["simulate", "--config", str(cfg)]) == 0
    sim = _last_run(tmp_path, "simulate")
    assert len(parse_tick_csv(sim / "ticks.csv")) > 0
    assert len(load_dataset(sim / "bars.csv")) == 4
    assert main(["fix", "--config", str(cfg), "--input", str(sim / "ticks.csv")]) == 0
    rows = read_fix_csv(_last_run(tmp_path, "fix") / "fixes.csv")
    assert len(rows) == 4
    assert all(res.mid == Decimal("1.25") for _, _, res in rows)


def test_vol_flags_959_on_compression(tmp_path):
    cfg = _config(tmp_path, scenario={"preset": "compression", "day_count": 400, "seed": 3})
    assert main(["vol", "--config", str(cfg)]) == 0
    run = _last_run(tmp_path, "vol")
    minutes = [int(line.split(",")[0]) for line in (run / "spikes.csv").read_text().splitlines()[1:]]
    assert 959 in minutes
    assert len(read_profile_csv(run / "vol_profile.csv").sigma) == 1440


def test_report_outputs_reparse_and_manifest(tmp_path):
    cfg = _config(
        tmp_path,
        scenario={"preset": "random_walk", "day_count": 15, "seed": 1},
        analysis={"delta_ts": [1, 5]},
    )
    assert main(["report", "--config", str(cfg), "--seed", "8"]) == 0
    run = _last_run(tmp_path, "report")
    manifest = json.loads((run / "manifest.json").read_text())
    assert manifest["seeds"] == {"scenario": 8, "analysis": 8}
    assert manifest["files"]["fixes.csv"]["rows"] == 15
    assert set(manifest["versions"]) >= {"fxfix", "numpy", "scipy", "python"}
    assert len(read_fix_csv(run / "fixes.csv")) == 15
    assert len(read_surfaces_csv(run / "surfaces.csv")[("int1", "max", "close")]) == 22 * 2
    assert len(read_histogram_csv(run / "centered_histogram.csv")) == 2 * 1440


def _peaked_bars(tmp_path, n_days=30):
    """Days with a centred extremum at 11:40, alternating max and min."""
    import datetime as dt

    import numpy as np

    from fxfix.ingestion import Dataset, write_bar_csv

    dates = [dt.date(2014, 1, 6) + dt.timedelta(days=i) for i in range(n_days)]
    close = np.full((n_days, 1440), 1.3)
    close[:, 700] = [1.301 if i % 2 == 0 else 1.299 for i in range(n_days)]
    path = tmp_path / "peaked.csv"
    write_bar_csv(path, Dataset("X", dates, np.stack([close] * 4, axis=-1)))
    return path, dates


def test_centered_with_external_returns(tmp_path):
    bars, dates = _peaked_bars(tmp_path)
    ext = tmp_path / "spx.csv"
    ext.write_text("date,return\n" + "".join(f"{d},{0.01 if i % 2 == 0 else -0.02}\n" for i, d in enumerate(dates)))
    cfg = _config(
        tmp_path,
        inputs={"bars": str(bars), "external_returns": str(ext)},
        analysis={"event_minute": 700, "permutations": 500, "streams": ["close"]},
    )
    assert main(["centered", "--config", str(cfg)]) == 0
    lines = (_last_run(tmp_path, "centered") / "correlation.csv").read_text().splitlines()
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert float(row["correlation"]) == pytest.approx(1.0)
    assert (row["n"], row["n_max"], row["n_min"]) == ("30", "15", "15")


def test_centered_correlation_needs_overlap(tmp_path):
    bars, dates = _peaked_bars(tmp_path)
    ext = tmp_path / "spx.csv"
    ext.write_text("date,return\n" + "".join(f"{d},0.01\n" for d in dates[:5]))
    cfg = _config(tmp_path, inputs={"bars": str(bars), "external_returns": str(ext)}, analysis={"event_minute": 700})
    assert main(["centered", "--config", str(cfg)]) == 5


def test_fresh_directory_per_run(tmp_path):
    cfg = _config(tmp_path, scenario={"preset": "random_walk", "day_count": 2})
    assert main(["extrema", "--config", str(cfg)]) == 0
    assert main(["extrema", "--config", str(cfg)]) == 0
    assert len(list((tmp_path / "runs").glob("extrema-*"))) == 2


def test_error_categories(tmp_path):
    assert main(["vol", "--config", str(tmp_path / "missing.yaml")]) == 3
    bad = tmp_path / "bad.yaml"
    bad.write_text("scenario: {preset: compression, warp: 9}\n")
    assert main(["vol", "--config", str(bad)]) == 3
    assert main(["vol", "--out", str(tmp_path / "o")]) == 4
    assert main(["vol", "--out", str(tmp_path / "o"), "--input", str(tmp_path / "nope.csv")]) == 4
    cfg = _config(tmp_path, scenario={"preset": "random_walk", "day_count": 2}, analysis={"hours": [0]})
    assert main(["extrema", "--config", str(cfg)]) == 5


def test_period_selection(tmp_path):
    cfg = _config(
        tmp_path,
        scenario={"preset": "random_walk", "day_count": 6, "start_date": "2013-05-28"},
        analysis={"delta_ts": [1]},
    )
    assert main(["fix", "--config", str(cfg), "--period", "post"]) == 0
    dates = [d.isoformat() for d, _, _ in read_fix_csv(_last_run(tmp_path, "fix") / "fixes.csv")]
    assert dates and min(dates) >= "2013-06-01"


def test_two_runs_identical_outputs(tmp_path):
    cfg = _config(tmp_path, scenario={"preset": "compression", "day_count": 12, "seed": 5}, analysis={"delta_ts": [1, 2]})
    assert main(["report", "--config", str(cfg)]) == 0
    assert main(["report", "--config", str(cfg)]) == 0
    a, b = sorted((tmp_path / "runs").glob("report-*"))
    for f in ("fixes.csv", "vol_profile.csv", "spikes.csv", "surfaces.csv", "centered_histogram.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    ma, mb = (json.loads((p / "manifest.json").read_text()) for p in (a, b))
    ma.pop("created_at"), mb.pop("created_at")
    assert ma == mb
