"""
Run configuration: defaults < config file < command-line flags.

Config files are line based `key = value` text with `#` comments. Values are
coerced to the type of the field default.
"""
import hashlib
import logging
import math
import os
from pathlib import Path
from typing import TYPE_CHECKING, NamedTuple

from heisencalc.errors import ConfigError

if TYPE_CHECKING:
    from typing import Any, Dict, Mapping, Optional

    from heisencalc.csvio import PathLike

logger = logging.getLogger(__name__)

CACHE_ENV = "HEISENCALC_CACHE"
MAX_D = 8
MAX_M = 4096
MAX_GRID_POINTS = 64**3
MAX_PANEL_ORDER = 64


class RunConfig(NamedTuple):
    d: int = 1
    m_max: int = 256
    lambda_min: float = 2.0**-12
    lambda_max: float = 2.0**12
    panel_order: int = 16
    panel_subdivisions: int = 4
    n_x: int = 33
    n_y: int = 33
    n_s: int = 32
    l_x: float = 8.0
    l_y: float = 8.0
    l_s: float = 16.0
    j_min: int = 0
    j_max: int = 4
    suites: str = "all"
    tol: float = 1e-4
    kernel_tol: float = 1e-5
    cache_dir: str = ""
    out_dir: str = "."
    threads: int = 1
    seed: "Optional[int]" = None
    quick: bool = False
    bernstein_slack: float = 1.5
    decay_uniformity: float = 1.2
    dilation_drift: float = 1e-3
    sobolev_drift: float = 1e-2

    def validated(self) -> "RunConfig":
        if not 1 <= self.d <= MAX_D:
            raise ConfigError(f"d must be in [1, {MAX_D}], got {self.d}")
        if not 0 <= self.m_max <= MAX_M:
            raise ConfigError(f"m_max must be in [0, {MAX_M}], got {self.m_max}")
        if not 0 < self.lambda_min < self.lambda_max:
            raise ConfigError(
                f"need 0 < lambda_min < lambda_max, got {self.lambda_min}, {self.lambda_max}"
            )
        octaves = math.log2(self.lambda_max / self.lambda_min)
        if octaves != round(octaves):
            raise ConfigError("lambda_max / lambda_min must be a power of two")
        if not 1 <= self.panel_order <= MAX_PANEL_ORDER:
            raise ConfigError(f"panel_order must be in [1, {MAX_PANEL_ORDER}], got {self.panel_order}")
        if self.panel_subdivisions < 1:
            raise ConfigError(f"panel_subdivisions must be positive, got {self.panel_subdivisions}")
        if min(self.n_x, self.n_y, self.n_s) < 3:
            raise ConfigError("physical grids need at least 3 nodes per axis")
        if self.n_x * self.n_y * self.n_s > MAX_GRID_POINTS:
            raise ConfigError(f"n_x * n_y * n_s must not exceed {MAX_GRID_POINTS}")
        if min(self.l_x, self.l_y, self.l_s) <= 0:
            raise ConfigError("grid extents must be positive")
        if self.j_min > self.j_max:
            raise ConfigError(f"empty block range {self.j_min}..{self.j_max}")
        if not (self.tol > 0 and self.kernel_tol > 0):
            raise ConfigError("tolerances must be positive")
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")
        return self

    def render(self) -> str:
        """
        Canonical `key = value` text, sorted by key.
        """
        return "".join(
            f"{key} = {_format(value)}\n" for key, value in sorted(self._asdict().items())
        )

    @property
    def j_range(self) -> "range":
        return range(self.j_min, self.j_max + 1)


_DEFAULTS = RunConfig()
# fields whose type cannot be read from the default value
_OPTIONAL_INT = {"seed"}


def _format(value: "Any") -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def coerce(key: str, raw: "Any") -> "Any":
    """
    Convert a raw value to the type of the default of `key`.
    """
    if key not in RunConfig._fields:
        raise ConfigError(f"unknown configuration key {key!r}")
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if key in _OPTIONAL_INT:
            return None if text.lower() in ("", "none") else int(text)
        default = getattr(_DEFAULTS, key)
        if isinstance(default, bool):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}") from None
    return text


def parse_config_text(text: str) -> "Dict[str, Any]":
    values: "Dict[str, Any]" = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        values[key] = coerce(key, raw)
    return values


def load_config(
    path: "Optional[PathLike]" = None, overrides: "Optional[Mapping[str, Any]]" = None
) -> RunConfig:
    """
    Defaults, then the config file, then the overrides; None overrides are ignored.

    The cache directory honours the HEISENCALC_CACHE environment variable above all.
    """
    values: "Dict[str, Any]" = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        values.update(parse_config_text(text))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = coerce(key, value)
    env_cache = os.environ.get(CACHE_ENV)
    if env_cache:
        values["cache_dir"] = env_cache
    config = RunConfig(**values).validated()
    logger.debug("Loaded configuration %s", config)
    return config


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(config.render().encode()).hexdigest()[:12]
