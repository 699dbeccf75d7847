"""Run configuration: a single YAML file with pairs, an optional scenario,
input paths and analysis parameters. Relative paths resolve against the
config file's directory."""
from __future__ import annotations

import dataclasses
import datetime as dt
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Any, Optional

import yaml

from .core import PairConfig
from .extrema import DELTA_TS, HOURS
from .simulator import SimScenario, compression_scenario, random_walk_scenario


class ConfigError(ValueError):
    pass


@dataclass
class AnalysisParams:
    spike_window: int = 30
    spike_z: float = 4.0
    hours: tuple[int, ...] = HOURS
    delta_ts: tuple[int, ...] = DELTA_TS
    surfaces: tuple[tuple[str, str, str], ...] = (
        ("int1", "max", "close"),
        ("int1", "min", "close"),
        ("int2", "max", "close"),
        ("int2", "min", "close"),
        ("int1", "delta", "close"),
    )
    centered_half_width: int = 20
    streams: tuple[str, ...] = ("high", "low", "close")
    event_minute: int = 960
    permutations: int = 10_000
    seed: int = 0


@dataclass
class RunConfig:
    pairs: list[PairConfig] = field(default_factory=lambda: [PairConfig()])
    scenario: Optional[SimScenario] = None
    bars: Optional[Path] = None
    ticks: Optional[Path] = None
    external_returns: Optional[Path] = None
    output: Path = Path("runs")
    period: str = "full"
    tick_span_s: int = 300
    quality_lookback_s: int = 300
    workers: int = 1
    analysis: AnalysisParams = field(default_factory=AnalysisParams)
    source_path: Optional[Path] = None

    def pair(self, code: Optional[str] = None) -> PairConfig:
        if code is None:
            return self.pairs[0]
        for p in self.pairs:
            if p.pair == code:
                return p
        raise ConfigError(f"pair {code!r} not in config (have {[p.pair for p in self.pairs]})")

    def snapshot(self) -> dict[str, Any]:
        """JSON-ready view of the effective configuration."""
        return _jsonable(
            {
                "pairs": [dataclasses.asdict(p) for p in self.pairs],
                "scenario": dataclasses.asdict(self.scenario) if self.scenario else None,
                "bars": self.bars,
                "ticks": self.ticks,
                "external_returns": self.external_returns,
                "period": self.period,
                "tick_span_s": self.tick_span_s,
                "quality_lookback_s": self.quality_lookback_s,
                "workers": self.workers,
                "analysis": dataclasses.asdict(self.analysis),
            }
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (Decimal, Path)):
        return str(obj)
    if isinstance(obj, dt.time):
        return obj.strftime("%H:%M:%S")
    if isinstance(obj, dt.date):
        return obj.isoformat()
    return obj


def _time(value) -> dt.time:
    if isinstance(value, dt.time):
        return value
    if isinstance(value, int):
        # YAML 1.1 reads 16:00 as the sexagesimal integer 960
        return dt.time(value // 60, value % 60)
    return dt.time.fromisoformat(str(value))


def _known(cls, data: dict, where: str) -> dict:
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")
    return data


def _pair(data: dict) -> PairConfig:
    data = dict(_known(PairConfig, data, "pair"))
    if "fix_time" in data:
        data["fix_time"] = _time(data["fix_time"])
    for key in ("standard_spread", "tick_size"):
        if key in data:
            data[key] = Decimal(str(data[key]))
    if "sources" in data:
        data["sources"] = tuple(data["sources"])
    return PairConfig(**data)


def _scenario(data: dict) -> SimScenario:
    data = dict(data)
    preset = data.pop("preset", "random_walk")
    factories = {"random_walk": random_walk_scenario, "compression": compression_scenario}
    if preset not in factories:
        raise ConfigError(f"unknown scenario preset {preset!r}")
    _known(SimScenario, data, "scenario")
    if "fix_time" in data:
        data["fix_time"] = _time(data["fix_time"])
    if "start_date" in data and not isinstance(data["start_date"], dt.date):
        data["start_date"] = dt.date.fromisoformat(str(data["start_date"]))
    if "tick_size" in data:
        data["tick_size"] = Decimal(str(data["tick_size"]))
    floats = {f.name for f in dataclasses.fields(SimScenario) if f.type in ("float", float)}
    for key in floats & set(data):
        # YAML 1.1 reads exponents without a dot (2e-6) as strings
        data[key] = float(data[key])
    return factories[preset](**data)


def _analysis(data: dict) -> AnalysisParams:
    data = dict(_known(AnalysisParams, data, "analysis"))
    for key in ("hours", "delta_ts", "streams"):
        if key in data:
            data[key] = tuple(data[key])
    if "surfaces" in data:
        data["surfaces"] = tuple(tuple(s) for s in data["surfaces"])
    return AnalysisParams(**data)


def from_dict(data: dict, base: Path = Path(".")) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    data = dict(data)
    allowed = {"pairs", "scenario", "inputs", "output", "period", "tick_span_s", "quality_lookback_s", "workers", "analysis"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    try:
        cfg = RunConfig()
        if "pairs" in data:
            cfg.pairs = [_pair(p) for p in data["pairs"]]
            if not cfg.pairs:
                raise ConfigError("pairs must not be empty")
        if data.get("scenario") is not None:
            cfg.scenario = _scenario(data["scenario"])
        inputs = data.get("inputs") or {}
        for key in ("bars", "ticks", "external_returns"):
            if inputs.get(key):
                setattr(cfg, key, (base / inputs[key]).resolve())
        if data.get("output"):
            cfg.output = (base / data["output"]).resolve()
        cfg.period = data.get("period", cfg.period)
        if cfg.period not in ("pre", "post", "full"):
            raise ConfigError(f"period must be pre, post or full, got {cfg.period!r}")
        cfg.tick_span_s = int(data.get("tick_span_s", cfg.tick_span_s))
        cfg.quality_lookback_s = int(data.get("quality_lookback_s", cfg.quality_lookback_s))
        cfg.workers = int(data.get("workers", cfg.workers))
        if cfg.workers < 1:
            raise ConfigError("workers must be at least 1")
        if data.get("analysis"):
            cfg.analysis = _analysis(data["analysis"])
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    cfg = from_dict(data, base=path.parent)
    cfg.source_path = path.resolve()
    return cfg
