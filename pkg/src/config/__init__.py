"""Configuration module for environment and run settings."""

from .settings import (
    SECTIONS,
    Settings,
    RunConfig,
    get_settings,
    load_run_config,
    parse_overrides,
)

__all__ = [
    "SECTIONS",
    "Settings",
    "RunConfig",
    "get_settings",
    "load_run_config",
    "parse_overrides",
]
