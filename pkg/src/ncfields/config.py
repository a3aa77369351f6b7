# ============================================================================
# Configuration Loader
# ============================================================================
# Loads the packaged YAML defaults and user config files.
#
# Usage:
#   from ncfields.config import ToolkitConfig, RunSettings
#
#   config = ToolkitConfig.from_yaml()
#   settings = RunSettings.from_env()
# ============================================================================

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import BaseModel, Field, ValidationError

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).parent / "config"
OUTPUT_DIR_ENV = "NCFIELDS_OUTPUT_DIR"
WORKERS_ENV = "NCFIELDS_WORKERS"


def load_yaml(filename: str) -> Dict:
    """Load a YAML config file from the package config directory."""
    filepath = CONFIG_DIR / filename
    if not filepath.exists():
        raise FileNotFoundError(f"Config file not found: {filepath}")

    with open(filepath, "r") as f:
        return yaml.safe_load(f)


def load_user_config(path: Optional[str]) -> Dict[str, Any]:
    """
    Load a user config file: a flat mapping of option name to value.

    Keys use the long flag names with dashes or underscores
    (``t-end`` and ``t_end`` are the same key).
    """
    if path is None:
        return {}

    filepath = Path(path)
    if not filepath.exists():
        raise ConfigurationError(f"Config file not found: {filepath}")

    try:
        with open(filepath, "r") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Could not parse config file {filepath}: {e}")

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {filepath} must hold a key-value mapping")

    flat = {}
    for key, value in data.items():
        if isinstance(value, dict):
            raise ConfigurationError(f"Config key '{key}' is nested; use flat key-value entries")
        flat[str(key).replace("-", "_")] = value
    logger.debug(f"Loaded {len(flat)} settings from {filepath}")
    return flat


@dataclass
class ToolkitConfig:
    """
    Tolerances and numerical defaults.

    Usage:
        config = ToolkitConfig.from_yaml()
        print(config.tolerances["oracle"])
    """

    tolerances: Dict[str, float]
    dynamics: Dict[str, float]
    sweep: Dict[str, Any] = field(default_factory=dict)
    evolve: Dict[str, Any] = field(default_factory=dict)
    output: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_yaml(cls, filename: str = "defaults.yaml") -> "ToolkitConfig":
        """Load config from YAML file."""
        config = load_yaml(filename)
        return cls(
            tolerances={k: float(v) for k, v in config["tolerances"].items()},
            dynamics={k: float(v) for k, v in config["dynamics"].items()},
            sweep=config.get("sweep", {}),
            evolve=config.get("evolve", {}),
            output=config.get("output", {}),
        )

    @property
    def algebraic_tol(self) -> float:
        return self.tolerances["algebraic"]

    @property
    def oracle_tol(self) -> float:
        return self.tolerances["oracle"]

    @property
    def cli_deviation_tol(self) -> float:
        return self.tolerances["cli_deviation"]

    def default(self, section: str, key: str, fallback: Any = None) -> Any:
        """Look up a default from one of the free-form sections."""
        return getattr(self, section, {}).get(key, fallback)


@lru_cache(maxsize=1)
def get_config() -> ToolkitConfig:
    """Packaged defaults, loaded once per process."""
    return ToolkitConfig.from_yaml()


class RunSettings(BaseModel):
    """Process-level settings for command-line runs"""
    output_dir: Optional[Path] = Field(None, description="Directory for output files when --out is not given")
    workers: int = Field(4, ge=1, description="Worker threads for parameter sweeps")
    verbose: bool = Field(False, description="Log at DEBUG level")

    @classmethod
    def from_env(cls) -> RunSettings:
        """Create settings from environment variables"""
        config = {}
        env_vars = {
            OUTPUT_DIR_ENV: "output_dir",
            WORKERS_ENV: "workers",
        }

        for env_var, config_key in env_vars.items():
            if value := os.getenv(env_var):
                config[config_key] = value

        try:
            return cls(**config)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid environment settings: {e}")

    def merged(self, **overrides: Any) -> RunSettings:
        """Return a copy with non-None overrides applied."""
        updates = {k: v for k, v in overrides.items() if v is not None}
        try:
            return RunSettings(**{**self.model_dump(), **updates})
        except ValidationError as e:
            raise ConfigurationError(f"Invalid settings: {e}")


def resolve_option(name: str, flag_value: Any, user_config: Dict[str, Any], default: Any) -> Any:
    """Command-line flag, then config file, then default."""
    if flag_value is not None:
        return flag_value
    if name in user_config and user_config[name] is not None:
        return user_config[name]
    return default
