#!/usr/bin/env python3
"""
Run configuration for toeplitz_spectra.py

Defaults live in an env-style file (toeplitz_config.env by default) read
with python-dotenv; process environment variables of the same name take
precedence over the file, and explicit command-line flags over both.
"""

import logging
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, Optional

from dotenv import dotenv_values

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = 'toeplitz_config.env'
MAX_N = 12
MAX_DEGREE_LIMIT = 500
FORMATS = ('csv', 'json')
GROUPS = ('symmetric', 'alternating')


class ConfigError(ValueError):
    """A configuration value lies outside its valid range."""


@dataclass(frozen=True)
class RunConfig:
    """
    Parameters shared by every subcommand.

    ``order`` of None means 12 + 2*max_degree.
    """
    n: int = 2
    alpha: float = 0.0
    max_degree: int = 8
    order: Optional[int] = None
    mc_samples: int = 100_000
    seed: int = 0
    tol: float = 1e-9
    format: str = 'csv'
    symbol: Optional[str] = None
    output: Optional[str] = None
    group: str = 'symmetric'
    inject_fault: Optional[str] = None
    workers: int = 1
    log_file: str = 'toeplitz_spectra.log'
    quiet: bool = False

    def validate(self) -> 'RunConfig':
        if not 1 <= self.n <= MAX_N:
            raise ConfigError(f"n must lie in [1, {MAX_N}], got {self.n}")
        if not math.isfinite(self.alpha) or self.alpha <= -1:
            raise ConfigError(f"alpha must be > -1, got {self.alpha}")
        if not 0 <= self.max_degree <= MAX_DEGREE_LIMIT:
            raise ConfigError(f"max_degree must lie in [0, {MAX_DEGREE_LIMIT}], got {self.max_degree}")
        if self.order is not None and self.order < 2:
            raise ConfigError(f"order must be at least 2, got {self.order}")
        if self.mc_samples < 1000:
            raise ConfigError(f"mc_samples must be at least 1000, got {self.mc_samples}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got '{self.format}'")
        if self.group not in GROUPS:
            raise ConfigError(f"group must be one of {GROUPS}, got '{self.group}'")
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")
        return self

    def with_overrides(self, overrides: Dict[str, Any]) -> 'RunConfig':
        """Replace the fields given with non-None values (command-line flags)."""
        known = {f.name for f in fields(self)}
        return replace(self, **{k: v for k, v in overrides.items() if k in known and v is not None})


# Env key -> (field, parser)
ENV_KEYS: Dict[str, tuple] = {
    'TOEPLITZ_N': ('n', int),
    'TOEPLITZ_ALPHA': ('alpha', float),
    'TOEPLITZ_MAX_DEGREE': ('max_degree', int),
    'TOEPLITZ_ORDER': ('order', int),
    'TOEPLITZ_MC_SAMPLES': ('mc_samples', int),
    'TOEPLITZ_SEED': ('seed', int),
    'TOEPLITZ_TOL': ('tol', float),
    'TOEPLITZ_FORMAT': ('format', str),
    'TOEPLITZ_WORKERS': ('workers', int),
    'TOEPLITZ_LOG_FILE': ('log_file', str),
}


def load_config(config_file: Optional[str] = None, environ: Optional[Dict[str, str]] = None) -> RunConfig:
    """
    Build a RunConfig from the env file and the process environment.

    Args:
        config_file (str, optional): Path of the env file, default toeplitz_config.env
        environ (dict, optional): Environment mapping, default os.environ

    Returns:
        RunConfig: Defaults overridden by the file, then by the environment
    """
    path = Path(config_file or DEFAULT_CONFIG_FILE)
    values: Dict[str, Optional[str]] = {}
    if path.exists():
        values.update(dotenv_values(path))
        logger.info(f"✅ Configuration loaded from {path}")
    elif config_file:
        logger.warning(f"⚠️ Configuration file '{path}' not found, using defaults")
    environ = os.environ if environ is None else environ
    values.update({key: environ[key] for key in ENV_KEYS if key in environ})

    defaults = RunConfig()
    settings = {}
    for key, (name, parse) in ENV_KEYS.items():
        raw = values.get(key)
        if raw is None or str(raw).strip() == '':
            continue
        try:
            settings[name] = _parse(parse, str(raw).strip())
        except (ValueError, TypeError):
            logger.warning(f"⚠️ Invalid value {key}={raw!r} in config, using default {getattr(defaults, name)!r}")
    return replace(defaults, **settings)


def _parse(parse: Callable, raw: str):
    value = parse(raw)
    if parse is float and not math.isfinite(value):
        raise ValueError(raw)
    return value


def render_config(cfg: RunConfig) -> str:
    """Commented env-file text holding the current values."""
    current = asdict(cfg)
    lines = [
        "# Toeplitz spectral table configuration",
        "# Generated by 'toeplitz_spectra.py init-config'",
        "# Command-line flags override these values; unset keys use built-in defaults.",
        "",
        "# Problem",
        f"TOEPLITZ_N={cfg.n}",
        f"TOEPLITZ_ALPHA={cfg.alpha!r}",
        f"TOEPLITZ_MAX_DEGREE={cfg.max_degree}",
        "",
        "# Numerics (empty order means 12 + 2*max_degree)",
        f"TOEPLITZ_ORDER={'' if cfg.order is None else cfg.order}",
        f"TOEPLITZ_MC_SAMPLES={cfg.mc_samples}",
        f"TOEPLITZ_SEED={cfg.seed}",
        f"TOEPLITZ_TOL={cfg.tol!r}",
        "",
        "# Output",
        f"TOEPLITZ_FORMAT={current['format']}",
        f"TOEPLITZ_WORKERS={cfg.workers}",
        f"TOEPLITZ_LOG_FILE={cfg.log_file}",
        "",
    ]
    return "\n".join(lines)


def write_config(cfg: RunConfig, config_file: Optional[str] = None, force: bool = False) -> Path:
    """Write ``render_config(cfg)``; refuses to overwrite unless ``force``."""
    path = Path(config_file or DEFAULT_CONFIG_FILE)
    if path.exists() and not force:
        raise FileExistsError(f"Configuration file '{path}' already exists (use --force to overwrite)")
    path.write_text(render_config(cfg))
    logger.info(f"✅ Configuration saved to '{path}'")
    return path
