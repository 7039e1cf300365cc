"""Application settings and run configuration files."""

import os
import typing
from dataclasses import MISSING, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from dotenv import dotenv_values, load_dotenv

from ..evaluation import EvalConfig
from ..network import TrainConfig
from ..pipeline import PipelineConfig
from ..svr import SVRHyper
from ..synthetic import SynthConfig
from ..utils.errors import ConfigError

env_path = Path(__file__).parent.parent.parent / '.env'
load_dotenv(env_path)


@dataclass
class Settings:
    """Process-wide settings from the environment."""

    log_level: str = "INFO"
    jobs: int = 1
    default_seed: int = 42

    @classmethod
    def from_env(cls) -> "Settings":
        """Load settings from environment variables."""
        try:
            return cls(
                log_level=os.getenv("LOG_LEVEL", "INFO"),
                jobs=int(os.getenv("SEMS_JOBS", "1")),
                default_seed=int(os.getenv("SEMS_SEED", "42")),
            )
        except ValueError as e:
            raise ConfigError(f"invalid environment setting: {e}") from e


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get the global settings instance."""
    global _settings
    if _settings is None:
        _settings = Settings.from_env()
    return _settings


# Config file sections, realized as key prefixes.
SECTIONS = ("PIPELINE", "TRAIN", "SVR", "EVAL", "SYNTH")
_SECTION_TYPES = {
    "PIPELINE": PipelineConfig,
    "TRAIN": TrainConfig,
    "SVR": SVRHyper,
    "EVAL": EvalConfig,
    "SYNTH": SynthConfig,
}
_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


@dataclass
class RunConfig:
    """Resolved configuration of one command run."""

    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    @property
    def seed(self) -> int:
        return self.pipeline.rng_seed

    def to_dict(self) -> Dict[str, Any]:
        return {"pipeline": self.pipeline.to_dict(), "synth": _asdict(self.synth)}


def _asdict(obj) -> Dict[str, Any]:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def _default_of(f) -> Any:
    if f.default is not MISSING:
        return f.default
    if f.default_factory is not MISSING:
        return f.default_factory()
    return None


def _is_optional(annotation) -> bool:
    return type(None) in typing.get_args(annotation)


def _convert(raw: str, f, key: str) -> Any:
    """Convert a config file string to the type of the field's default."""
    default = _default_of(f)
    text = raw.strip()
    if text.lower() == "none" and (default is None or _is_optional(f.type)):
        return None
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float) or default is None:
            return float(text)
        if isinstance(default, tuple):
            return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise ConfigError(f"{key}: {e}", key) from e
    return text


def _section_values(
    section: str, values: Mapping[str, str]
) -> Dict[str, Any]:
    cls = _SECTION_TYPES[section]
    by_key = {
        f"{section}_{f.name.upper()}": f
        for f in fields(cls)
        if not is_dataclass(_default_of(f))
    }
    converted = {}
    for key, raw in values.items():
        if key not in by_key:
            raise ConfigError(f"unknown configuration key {key}", key)
        f = by_key[key]
        converted[f.name] = _convert(raw, f, key)
    return converted


def _build(section: str, kwargs: Dict[str, Any], **nested):
    try:
        return _SECTION_TYPES[section](**kwargs, **nested)
    except ConfigError as e:
        key = f"{section}_{e.field.upper()}" if e.field else section
        raise ConfigError(f"{key}: {e}", key) from e


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    defaults: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Resolve a run configuration.

    Precedence, lowest first: dataclass defaults, `defaults` (environment
    settings), the `KEY=VALUE` file at `path`, then `overrides` (command
    line flags).

    Args:
        path: Config file, or None for defaults only
        overrides: Keys such as "TRAIN_EPOCHS" mapped to values
        defaults: Same shape as overrides, applied below the file

    Raises:
        ConfigError: missing file, unknown key or invalid value (naming the key)
    """
    merged: Dict[str, str] = {}
    for key, value in (defaults or {}).items():
        merged[key.upper()] = str(value)
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}", "config")
        for key, value in dotenv_values(path).items():
            if value is None:
                raise ConfigError(f"{key} has no value", key)
            merged[key.upper()] = value
    for key, value in (overrides or {}).items():
        merged[key.upper()] = str(value)

    grouped: Dict[str, Dict[str, str]] = {s: {} for s in SECTIONS}
    for key, value in merged.items():
        section = key.split("_", 1)[0]
        if section not in grouped:
            raise ConfigError(f"unknown configuration key {key}", key)
        grouped[section][key] = value

    kwargs = {s: _section_values(s, grouped[s]) for s in SECTIONS}
    pipeline = _build(
        "PIPELINE",
        kwargs["PIPELINE"],
        train=_build("TRAIN", kwargs["TRAIN"]),
        svr=_build("SVR", kwargs["SVR"]),
        eval=_build("EVAL", kwargs["EVAL"]),
    )
    synth = _build("SYNTH", kwargs["SYNTH"])
    return RunConfig(pipeline=pipeline, synth=synth)


def parse_overrides(pairs) -> Dict[str, str]:
    """Turn repeated `KEY=VALUE` command line strings into a dict."""
    overrides = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"expected KEY=VALUE, got {pair!r}", "set")
        overrides[key.strip().upper()] = value.strip()
    return overrides
