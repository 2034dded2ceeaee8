"""Experiment configuration: TOML parsing and validation.

Strategy parameter tables use their canonical names verbatim (short_window,
atr_period, devfactor, ...) so a published parameter sheet maps 1:1 onto
config keys. Paths are resolved relative to the config file.
"""

from __future__ import annotations

import datetime as dt
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .engine import ExecutionConfig
from .errors import ConfigError, SaberError
from .pipeline import WindowSpec
from .strategies.selection import SelectionSpec
from .strategies.timing import TIMING_STRATEGY_NAMES

SEED_ENV = "SABER_SEED"


@dataclass
class ExperimentConfig:
    config_path: Path
    prices_dir: Path
    benchmark: str
    mode: str
    output_dir: Path
    window: WindowSpec
    execution: ExecutionConfig
    strategies: dict[str, dict]
    adapters: dict[str, dict] = field(default_factory=dict)
    symbols: list[str] = field(default_factory=list)
    membership_path: Path | None = None
    texts_path: Path | None = None
    selection: SelectionSpec | None = None
    seed: int = 0
    jobs: int = 1
    t_test_pairing: str = "window_symbol"
    raw: dict = field(default_factory=dict)

    @property
    def data_files(self) -> list[Path]:
        files = sorted(self.prices_dir.glob("*.csv"))
        if self.membership_path:
            files.append(self.membership_path)
        if self.texts_path:
            files.append(self.texts_path)
        return files


def _date(raw: dict, section: str, key: str) -> dt.date:
    value = raw.get(key)
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    if isinstance(value, str):
        try:
            return dt.date.fromisoformat(value)
        except ValueError:
            pass
    raise ConfigError(f"{section}.{key}", f"expected an ISO date, got {value!r}")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"{path} does not exist")
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"TOML parse error: {exc}") from None
    base = path.parent

    data = raw.get("data")
    if not isinstance(data, dict):
        raise ConfigError("data", "missing [data] section")
    if "prices_dir" not in data:
        raise ConfigError("data.prices_dir", "required")
    prices_dir = base / data["prices_dir"]
    if not prices_dir.is_dir():
        raise ConfigError("data.prices_dir", f"{prices_dir} is not a directory")
    benchmark = data.get("benchmark")
    if not benchmark:
        raise ConfigError("data.benchmark", "required (symbol of the benchmark index)")
    membership = base / data["membership"] if "membership" in data else None
    texts = base / data["texts"] if "texts" in data else None

    exp = raw.get("experiment")
    if not isinstance(exp, dict):
        raise ConfigError("experiment", "missing [experiment] section")
    mode = exp.get("mode")
    if mode not in ("selected", "composite"):
        raise ConfigError("experiment.mode", f"must be 'selected' or 'composite', got {mode!r}")
    eval_start = _date(exp, "experiment", "eval_start")
    eval_end = _date(exp, "experiment", "eval_end")
    try:
        window = WindowSpec(
            eval_start=eval_start,
            eval_end=eval_end,
            window_len_years=int(exp.get("window_len_years", 1)),
            step_years=int(exp.get("step_years", 1)),
            train_lookback_years=int(exp.get("train_lookback_years", 2)),
        )
    except (ValueError, SaberError) as exc:
        raise ConfigError("experiment", str(exc)) from None

    symbols = list(exp.get("symbols", []))
    if mode == "selected" and not symbols:
        raise ConfigError("experiment.symbols", "selected mode requires an explicit symbol list")

    selection = None
    if mode == "composite":
        if membership is None:
            raise ConfigError("data.membership", "composite mode requires a membership file")
        sel_raw = raw.get("selection")
        if not isinstance(sel_raw, dict):
            raise ConfigError("selection", "composite mode requires a [selection] section")
        try:
            selection = SelectionSpec(**sel_raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError("selection", str(exc)) from None
    if membership is not None and not membership.is_file():
        raise ConfigError("data.membership", f"{membership} does not exist")
    if texts is not None and not texts.is_file():
        raise ConfigError("data.texts", f"{texts} does not exist")

    try:
        execution = ExecutionConfig(**raw.get("execution", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError("execution", str(exc)) from None

    strategies = {}
    for name, params in raw.get("strategies", {}).items():
        if name not in TIMING_STRATEGY_NAMES:
            raise ConfigError(f"strategies.{name}", "unknown strategy")
        if not isinstance(params, dict):
            raise ConfigError(f"strategies.{name}", "must be a table of parameters")
        strategies[name] = params

    adapters = {}
    for name, params in raw.get("adapters", {}).items():
        if not isinstance(params, dict) or "command" not in params:
            raise ConfigError(f"adapters.{name}", "requires a 'command' list")
        command = params["command"]
        if not isinstance(command, list) or not all(isinstance(c, str) for c in command):
            raise ConfigError(f"adapters.{name}.command", "must be a list of strings")
        adapters[name] = params

    if not strategies and not adapters:
        raise ConfigError("strategies", "at least one strategy or adapter is required")

    seed = int(exp.get("seed", 0))
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigError(SEED_ENV, f"not an integer: {env_seed!r}") from None

    if "output_dir" not in exp:
        raise ConfigError("experiment.output_dir", "required")

    analysis = raw.get("analysis", {})
    pairing = analysis.get("t_test_pairing", "window_symbol")
    if pairing not in ("window_symbol", "window_mean"):
        raise ConfigError("analysis.t_test_pairing", f"unknown pairing {pairing!r}")

    return ExperimentConfig(
        config_path=path,
        prices_dir=prices_dir,
        benchmark=benchmark,
        mode=mode,
        output_dir=base / exp["output_dir"],
        window=window,
        execution=execution,
        strategies=strategies,
        adapters=adapters,
        symbols=symbols,
        membership_path=membership,
        texts_path=texts,
        selection=selection,
        seed=seed,
        jobs=int(exp.get("jobs", 0)),
        t_test_pairing=pairing,
        raw=raw,
    )
