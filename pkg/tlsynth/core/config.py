import os
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError


def _env_float(name: str, default: str) -> float:
    raw = os.environ.get(name, default)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name}={raw!r} is not a number") from None


def _env_optional_float(name: str) -> Optional[float]:
    raw = os.environ.get(name, '')
    return _env_float(name, raw) if raw.strip() else None


def _env_flag(name: str, default: str) -> bool:
    raw = os.environ.get(name, default).strip().lower()
    if raw in ('1', 'true', 'yes', 'on'):
        return True
    if raw in ('0', 'false', 'no', 'off'):
        return False
    raise ConfigError(f"{name}={raw!r} is not a boolean")


@dataclass
class BnbOptions:
    """Branch-and-bound configuration."""
    int_tol: float = field(default_factory=lambda: _env_float('TLSYNTH_INT_TOL', '1e-6'))
    gap: float = field(default_factory=lambda: _env_float('TLSYNTH_GAP', '1e-6'))
    node_limit: int = field(
        default_factory=lambda: int(_env_float('TLSYNTH_NODE_LIMIT', '100000'))
    )
    time_limit: Optional[float] = field(
        default_factory=lambda: _env_optional_float('TLSYNTH_TIME_LIMIT')
    )
    # round every open node's binaries and re-solve for an early incumbent
    rounding: bool = field(default_factory=lambda: _env_flag('TLSYNTH_ROUNDING', 'false'))

    def __post_init__(self):
        if self.int_tol <= 0 or self.gap <= 0:
            raise ConfigError("integrality tolerance and gap must be positive")
        if self.node_limit < 1:
            raise ConfigError("node limit must be at least 1")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ConfigError("time limit must be positive")


@dataclass
class EncoderConfig:
    """MILP encoding constants."""
    delta: float = field(default_factory=lambda: _env_float('TLSYNTH_DELTA', '1e-4'))
    big_m_margin: float = field(
        default_factory=lambda: _env_float('TLSYNTH_BIG_M_MARGIN', '1.0')
    )

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigError("delta must be positive")
        if self.big_m_margin < self.delta:
            raise ConfigError("big-M margin must be at least delta")


@dataclass
class LoggingConfig:
    """Logging configuration."""
    level: str = field(default_factory=lambda: os.environ.get('LOG_LEVEL', 'warning'))
    log_dir: Optional[str] = field(default_factory=lambda: os.environ.get('LOG_DIR') or None)


class AppConfig:
    """Application configuration container."""

    def __init__(self):
        self.solver = BnbOptions()
        self.encoder = EncoderConfig()
        self.logging = LoggingConfig()
