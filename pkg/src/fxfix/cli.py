"""Batch command line: ``fxfix <subcommand> [--config FILE] [options]``.

Subcommands: simulate, fix, vol, extrema, centered, report. Every run writes
into a fresh ``<out>/<subcommand>-<UTC timestamp>`` directory together with
a ``manifest.json``.

Exit codes: 0 success, 2 usage, 3 configuration, 4 missing or unreadable
input, 5 analysis failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import hashlib
import json
import logging
import platform
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import scipy

from . import __version__
from .centered import (
    InsufficientDataError,
    aggregate,
    day_events,
    directional_correlation,
    parity_pvalue,
    write_histogram_csv,
)
from .config import ConfigError, RunConfig, load_config
from .core import MINUTES_PER_DAY, PairConfig, fix_center, utc_ms_to_local
from .extrema import build_surface, write_surfaces_csv
from .fix import FixResult, NoDataError, compute_fix, write_fix_csv
from .ingestion import (
    PERIOD_SPLIT,
    Dataset,
    ParseError,
    load_dataset,
    parse_returns_csv,
    parse_tick_csv,
    split_periods,
    write_bar_csv,
    write_tick_csv,
)
from .simulator import DayTicks, gen_day
from .vol import detect_spikes, minute_returns, vol_profile, write_profile_csv, write_spikes_csv

log = logging.getLogger("fxfix")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_INPUT, EXIT_ANALYSIS = 0, 2, 3, 4, 5
SUBCOMMANDS = ("simulate", "fix", "vol", "extrema", "centered", "report")


class MissingInputError(FileNotFoundError):
    pass


class AnalysisError(RuntimeError):
    def __init__(self, module: str, exc: BaseException):
        super().__init__(f"{module}: {exc}")
        self.module = module


# -- helpers -----------------------------------------------------------------


class RunDir:
    """Output directory of one run; tracks rows and digests of written files."""

    def __init__(self, root: Path, subcommand: str, now: Optional[dt.datetime] = None):
        now = now or dt.datetime.now(dt.timezone.utc)
        stamp = now.strftime("%Y%m%dT%H%M%S%fZ")
        root.mkdir(parents=True, exist_ok=True)
        for k in range(1000):
            path = root / (f"{subcommand}-{stamp}" + (f"-{k}" if k else ""))
            try:
                path.mkdir()
                break
            except FileExistsError:
                continue
        else:  # pragma: no cover
            raise OSError(f"cannot create a fresh run directory under {root}")
        self.path = path
        self.created_at = now.isoformat()
        self.files: dict[str, dict] = {}

    def write(self, name: str, writer: Callable[[Path], int]) -> Path:
        target = self.path / name
        rows = writer(target)
        digest = hashlib.sha256(target.read_bytes()).hexdigest()
        self.files[name] = {"rows": rows, "sha256": digest}
        log.info("wrote %s (%d rows)", target, rows)
        return target


def _analysis(module: str, fn, *args, **kwargs):
    """Call an analysis function, tagging failures with their module."""
    try:
        return fn(*args, **kwargs)
    except (ValueError, ArithmeticError) as exc:
        raise AnalysisError(module, exc) from exc


def _require(path: Optional[Path], what: str) -> Path:
    if path is None:
        raise MissingInputError(f"no {what} input configured")
    if not Path(path).is_file():
        raise MissingInputError(f"{what} input not found: {path}")
    return Path(path)


def _period(ds: Dataset, period: str) -> Dataset:
    if period == "full":
        return ds
    pre, post = split_periods(ds)
    return pre if period == "pre" else post


def _in_period(date: dt.date, period: str) -> bool:
    return period == "full" or (date < PERIOD_SPLIT) == (period == "pre")


def fix_bounds(pair: PairConfig, date: dt.date, lookback_s: int = 300) -> tuple[int, int, int]:
    """(center, exclusive low, inclusive high) UTC ms of the ticks a day's fix needs.

    ``lookback_s`` seconds ahead of the window feed the quality filter's
    reference level.
    """
    center = fix_center(date, pair.fix_time)
    window = pair.window(center)
    return center, window.start - lookback_s * 1000, window.end


def day_fix(day: DayTicks, pair: PairConfig, lookback_s: int = 300) -> FixResult:
    """Fix of one simulated day."""
    center, lo, hi = fix_bounds(pair, day.date, lookback_s)
    base = day.midnight_utc
    return compute_fix(day.to_ticks(lo + 1 - base, hi - base), pair, center)


# -- per-day simulation ------------------------------------------------------


@dataclasses.dataclass
class _DayOut:
    date: dt.date
    bars: np.ndarray
    fix: object = None
    ticks: Optional[list] = None


def _sim_day(args) -> _DayOut:
    scenario, day_index, pair, lookback_s, tick_span_s, want_fix = args
    day = gen_day(scenario, day_index)
    out = _DayOut(day.date, day.bars())
    if tick_span_s is not None:
        span = tick_span_s * 1000
        out.ticks = day.to_ticks(scenario.fix_ms - span, scenario.fix_ms + span)
    if want_fix:
        try:
            out.fix = day_fix(day, pair, lookback_s)
        except NoDataError as exc:
            out.fix = str(exc)
    return out


def _simulate(cfg: RunConfig, pair: PairConfig, tick_span_s=None, want_fix=False):
    sc = cfg.scenario
    jobs = [(sc, d, pair, cfg.quality_lookback_s, tick_span_s, want_fix) for d in range(sc.day_count)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            yield from pool.map(_sim_day, jobs, chunksize=16)
    else:
        yield from map(_sim_day, jobs)


def _complete(days: Sequence[_DayOut], pair: str) -> Dataset:
    keep = [d for d in days if not np.isnan(d.bars).any()]
    bars = np.stack([d.bars for d in keep]) if keep else np.empty((0, MINUTES_PER_DAY, 4))
    return Dataset(pair, [d.date for d in keep], bars, "full", len(days) - len(keep))


def _dataset(cfg: RunConfig, pair: PairConfig) -> Dataset:
    if cfg.bars is not None:
        ds = load_dataset(_require(cfg.bars, "bars"), pair.pair)
    elif cfg.scenario is not None:
        ds = _complete(list(_simulate(cfg, pair)), pair.pair)
    else:
        raise MissingInputError("no bars input and no scenario configured")
    return _period(ds, cfg.period)


# -- analyses ----------------------------------------------------------------


def _do_vol(run: RunDir, cfg: RunConfig, ds: Dataset) -> None:
    a = cfg.analysis
    matrix = _analysis("vol", minute_returns, ds)
    profile = _analysis("vol", vol_profile, matrix)
    spikes = _analysis("vol", detect_spikes, profile, a.spike_window, a.spike_z)
    run.write("vol_profile.csv", lambda p: write_profile_csv(p, profile))
    run.write("spikes.csv", lambda p: write_spikes_csv(p, spikes))


def _do_extrema(run: RunDir, cfg: RunConfig, ds: Dataset) -> None:
    a = cfg.analysis
    surfaces = [
        _analysis("extrema", build_surface, ds, side, kind, stream, a.hours, a.delta_ts)
        for side, kind, stream in a.surfaces
    ]
    run.write("surfaces.csv", lambda p: write_surfaces_csv(p, surfaces))


def _write_correlation(path: Path, rows: list[tuple]) -> int:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["minute", "stream", "n", "correlation", "p_value", "n_max", "n_min", "parity_p_value"])
        writer.writerows(rows)
    return len(rows)


def _do_centered(run: RunDir, cfg: RunConfig, ds: Dataset) -> None:
    a = cfg.analysis
    hist = _analysis("centered", aggregate, ds, a.streams, a.centered_half_width)
    run.write("centered_histogram.csv", lambda p: write_histogram_csv(p, hist))
    if cfg.external_returns is None:
        return
    external = parse_returns_csv(_require(cfg.external_returns, "external returns"))
    rows = []
    for stream in a.streams:
        events = _analysis("centered", day_events, ds, a.event_minute, stream, a.centered_half_width)
        res = _analysis(
            "centered", directional_correlation, events, external, a.permutations, a.seed
        )
        n_max = sum(1 for _, s in events if s > 0)
        n_min = len(events) - n_max
        rows.append(
            (a.event_minute, stream, res.n, repr(res.correlation), repr(res.p_value), n_max, n_min,
             repr(parity_pvalue(n_max, n_min)))
        )
    run.write("correlation.csv", lambda p: _write_correlation(p, rows))


# -- subcommands -------------------------------------------------------------


def _cmd_simulate(run: RunDir, cfg: RunConfig, pair: PairConfig) -> None:
    if cfg.scenario is None:
        raise ConfigError("simulate needs a scenario section")
    days = []
    ticks_path = run.path / "ticks.csv"
    write_tick_csv(ticks_path, [])
    n_ticks = 0
    for out in _simulate(cfg, pair, tick_span_s=cfg.tick_span_s):
        n_ticks += write_tick_csv(ticks_path, out.ticks, append=True)
        out.ticks = None
        days.append(out)
    run.files["ticks.csv"] = {"rows": n_ticks, "sha256": hashlib.sha256(ticks_path.read_bytes()).hexdigest()}
    # incomplete days are kept here; the bar reader drops them later
    bars = np.stack([d.bars for d in days]) if days else np.empty((0, MINUTES_PER_DAY, 4))
    ds = Dataset(pair.pair, [d.date for d in days], bars)
    run.write("bars.csv", lambda p: write_bar_csv(p, ds))


def _fixes_from_ticks(cfg: RunConfig, pair: PairConfig) -> list[tuple]:
    ticks = parse_tick_csv(_require(cfg.ticks, "ticks"))
    by_date: dict[dt.date, list] = {}
    for t in ticks:
        by_date.setdefault(utc_ms_to_local(t.timestamp)[0], []).append(t)
    rows = []
    for date in sorted(by_date):
        if not _in_period(date, cfg.period):
            continue
        center, lo, hi = fix_bounds(pair, date, cfg.quality_lookback_s)
        day = [t for t in by_date[date] if lo < t.timestamp <= hi]
        try:
            rows.append((date, pair.pair, compute_fix(day, pair, center)))
        except NoDataError as exc:
            rows.append((date, pair.pair, str(exc)))
        except ValueError as exc:
            raise AnalysisError("fix", exc) from exc
    return rows


def _cmd_fix(run: RunDir, cfg: RunConfig, pair: PairConfig) -> None:
    if cfg.ticks is None and cfg.scenario is not None:
        rows = [
            (d.date, pair.pair, d.fix)
            for d in _simulate(cfg, pair, want_fix=True)
            if _in_period(d.date, cfg.period)
        ]
    else:
        rows = _fixes_from_ticks(cfg, pair)
    run.write("fixes.csv", lambda p: write_fix_csv(p, rows))


def _cmd_vol(run, cfg, pair):
    _do_vol(run, cfg, _dataset(cfg, pair))


def _cmd_extrema(run, cfg, pair):
    _do_extrema(run, cfg, _dataset(cfg, pair))


def _cmd_centered(run, cfg, pair):
    _do_centered(run, cfg, _dataset(cfg, pair))


def _cmd_report(run: RunDir, cfg: RunConfig, pair: PairConfig) -> None:
    """Fixes plus all three analyses in one pass."""
    if cfg.scenario is not None and cfg.bars is None:
        days = [d for d in _simulate(cfg, pair, want_fix=cfg.ticks is None) if _in_period(d.date, cfg.period)]
        ds = _complete(days, pair.pair)
        ds.period_tag = cfg.period
        fixes = [(d.date, pair.pair, d.fix) for d in days] if cfg.ticks is None else _fixes_from_ticks(cfg, pair)
    else:
        ds = _dataset(cfg, pair)
        fixes = _fixes_from_ticks(cfg, pair) if cfg.ticks is not None else []
    if fixes:
        run.write("fixes.csv", lambda p: write_fix_csv(p, fixes))
    _do_vol(run, cfg, ds)
    _do_extrema(run, cfg, ds)
    _do_centered(run, cfg, ds)


COMMANDS = {
    "simulate": _cmd_simulate,
    "fix": _cmd_fix,
    "vol": _cmd_vol,
    "extrema": _cmd_extrema,
    "centered": _cmd_centered,
    "report": _cmd_report,
}


def _manifest(run: RunDir, subcommand: str, cfg: RunConfig, pair: PairConfig) -> dict:
    return {
        "subcommand": subcommand,
        "created_at": run.created_at,
        "pair": pair.pair,
        "period": cfg.period,
        "config_file": str(cfg.source_path) if cfg.source_path else None,
        "config": cfg.snapshot(),
        "seeds": {
            "scenario": cfg.scenario.seed if cfg.scenario else None,
            "analysis": cfg.analysis.seed,
        },
        "versions": {
            "fxfix": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "files": run.files,
    }


def run(subcommand: str, config: RunConfig, pair: Optional[str] = None, now: Optional[dt.datetime] = None) -> Path:
    """Execute one subcommand and return its run directory.

    Raises ConfigError, MissingInputError/ParseError or AnalysisError; the
    command-line entry point turns these into exit codes.
    """
    if subcommand not in COMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    pair_cfg = config.pair(pair)
    for what in ("bars", "ticks", "external_returns"):
        path = getattr(config, what)
        if path is not None and not Path(path).is_file():
            raise MissingInputError(f"{what} input not found: {path}")
    out = RunDir(Path(config.output), subcommand, now)
    COMMANDS[subcommand](out, config, pair_cfg)
    manifest = _manifest(out, subcommand, config, pair_cfg)
    (out.path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out.path


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--pair", help="pair code from the config (default: first)")
    common.add_argument("--period", choices=("pre", "post", "full"), help="date range to analyse")
    common.add_argument("--out", type=Path, help="root directory for run outputs")
    common.add_argument("--seed", type=int, help="override scenario and analysis seeds")
    common.add_argument("--input", type=Path, help="bars CSV (ticks CSV for fix) overriding the config")
    common.add_argument("--workers", type=int, help="processes for per-day simulation")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="fxfix", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"fxfix {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")
    helps = {
        "simulate": "simulate a scenario and write bars.csv and ticks.csv",
        "fix": "compute the daily fix from ticks (or a scenario)",
        "vol": "volatility profile and spike list",
        "extrema": "extrema probability surfaces",
        "centered": "centred-extremum histogram (and correlation with external returns)",
        "report": "fixes plus all analyses with one manifest",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.period:
        cfg.period = args.period
    if args.out:
        cfg.output = args.out
    if args.workers:
        cfg.workers = args.workers
    if args.seed is not None:
        if cfg.scenario is not None:
            cfg.scenario = dataclasses.replace(cfg.scenario, seed=args.seed)
        cfg.analysis = dataclasses.replace(cfg.analysis, seed=args.seed)
    if args.input:
        if args.subcommand == "fix":
            cfg.ticks = args.input.resolve()
        else:
            cfg.bars = args.input.resolve()
    return cfg


def _origin(exc: BaseException) -> str:
    for frame in reversed(traceback.extract_tb(exc.__traceback__)):
        if "/fxfix/" in frame.filename.replace("\\", "/"):
            return Path(frame.filename).stem
    return "fxfix"


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = _apply_overrides(cfg, args)
        path = run(args.subcommand, cfg, args.pair)
    except ConfigError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingInputError, ParseError, OSError) as exc:
        print(f"error[input]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AnalysisError as exc:
        print(f"error[analysis:{exc.module}]: {exc.__cause__}", file=sys.stderr)
        return EXIT_ANALYSIS
    except (ValueError, ArithmeticError, InsufficientDataError) as exc:
        print(f"error[analysis:{_origin(exc)}]: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    print(path)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
