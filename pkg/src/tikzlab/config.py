"""Run configuration with CLI > environment > config file > default
precedence; the effective config is serialized into output metadata."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigInvalid

ENV_PREFIX = "TIKZLAB_"


@dataclass
class Config:
    engine_cmd: str = "pdflatex"
    raster_cmd: str = "pdftoppm"
    embedder_addr: Optional[str] = None
    seed: int = 0
    max_attempts: int = 10
    timeout_s: float = 60.0
    dpi: int = 300
    jobs: int = 0  # 0 = logical core count
    kid_subsets: int = 100
    kid_subset_size: int = 1000
    crystalbleu_k: int = 500
    clipscore_weighted: bool = False

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigInvalid("seed must be >= 0")
        if self.max_attempts < 1:
            raise ConfigInvalid("max_attempts must be >= 1")
        if self.timeout_s <= 0:
            raise ConfigInvalid("timeout_s must be positive")
        if self.dpi <= 0:
            raise ConfigInvalid("dpi must be positive")
        if self.jobs == 0:
            self.jobs = os.cpu_count() or 1

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f.type for f in dataclasses.fields(Config)}


def _coerce(name: str, raw: str):
    if name not in _FIELDS:
        raise ConfigInvalid(f"unknown config key {name!r}")
    default = getattr(Config(), name)
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config_file(path: str | Path) -> dict:
    """TOML-like key=value lines; # comments and blank lines ignored."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigInvalid(f"{path}:{lineno}: expected key=value")
        key, _, raw = line.partition("=")
        values[key.strip()] = _coerce(key.strip(), raw.strip().strip('"'))
    return values


def env_overrides() -> dict:
    values = {}
    for name in _FIELDS:
        raw = os.environ.get(ENV_PREFIX + name.upper())
        if raw is not None:
            values[name] = _coerce(name, raw)
    return values


def load_config(
    config_file: Optional[str | Path] = None, cli_overrides: Optional[dict] = None
) -> Config:
    values: dict = {}
    if config_file:
        values.update(parse_config_file(config_file))
    values.update(env_overrides())
    if cli_overrides:
        values.update({k: v for k, v in cli_overrides.items() if v is not None})
    try:
        return Config(**values)
    except TypeError as exc:
        raise ConfigInvalid(str(exc)) from exc
