"""Latency of fragmented packets over a heterogeneous Poisson interference field.

Stochastic-geometry success probabilities feed discrete-time QBD queue models
for static and dynamic fragmentation; a Monte Carlo simulator cross-checks both.
"""

from .errors import ConfigError, FraglatError, NumericError, QbdValidationError, ReducibleChainError
from .model import (
    FieldConfig,
    LinkConfig,
    RateLadder,
    SchemeConfig,
    build_rate_ladder,
    default_paper_config,
    phase_count,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "FieldConfig",
    "FraglatError",
    "LinkConfig",
    "NumericError",
    "QbdValidationError",
    "RateLadder",
    "ReducibleChainError",
    "SchemeConfig",
    "build_rate_ladder",
    "default_paper_config",
    "phase_count",
]
