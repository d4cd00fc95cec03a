"""Configuration types and the rate/threshold ladder.

All quantities are SI: meters, seconds, Watts, Hz, bits, devices per m^2.
Conversion from the friendlier units used in config files happens in
:mod:`fraglat.config` and nowhere else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError

# Largest exponent for which 2**x - 1 is a finite double.
_MAX_EXPONENT = 1023.0


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


@dataclass(frozen=True)
class LinkConfig:
    """Intended link and traffic parameters.

    ``w_t`` transmit power [W], ``R_o`` link distance [m], ``eta`` path-loss
    exponent, ``alpha`` per-slot packet arrival probability, ``L`` packet
    size [bits], ``W`` bandwidth [Hz], ``zeta`` capacity-gap factor,
    ``T_s`` slot duration [s], ``N`` number of rates, ``M`` number of TSP
    classes.
    """

    w_t: float
    R_o: float
    eta: float
    alpha: float
    L: float
    W: float
    zeta: float
    T_s: float
    N: int
    M: int

    def __post_init__(self):
        for name in ("w_t", "R_o", "L", "W", "T_s"):
            value = getattr(self, name)
            _require(math.isfinite(value) and value > 0, f"{name} must be positive, got {value!r}")
        _require(self.eta > 2, f"eta must exceed 2, got {self.eta!r}")
        _require(0 < self.alpha < 1, f"alpha must lie in (0, 1), got {self.alpha!r}")
        _require(0 < self.zeta <= 1, f"zeta must lie in (0, 1], got {self.zeta!r}")
        _require(int(self.N) == self.N and self.N >= 1, f"N must be a positive integer, got {self.N!r}")
        _require(int(self.M) == self.M and self.M >= 1, f"M must be a positive integer, got {self.M!r}")
        _require(self.N < 1 / self.alpha, f"N={self.N} violates N < 1/alpha={1 / self.alpha:g}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "M", int(self.M))


@dataclass(frozen=True)
class FieldConfig:
    """Heterogeneous Poisson field of interferers.

    ``lam`` is the total density [devices/m^2]; the per-type density is
    ``type_probs[v] * lam``.
    """

    lam: float
    type_probs: tuple
    powers: tuple
    activities: tuple

    def __post_init__(self):
        probs = tuple(float(x) for x in self.type_probs)
        powers = tuple(float(x) for x in self.powers)
        acts = tuple(float(x) for x in self.activities)
        object.__setattr__(self, "type_probs", probs)
        object.__setattr__(self, "powers", powers)
        object.__setattr__(self, "activities", acts)
        _require(math.isfinite(self.lam) and self.lam >= 0, f"lam must be nonnegative, got {self.lam!r}")
        _require(len(probs) >= 1, "at least one device type is required")
        _require(
            len(probs) == len(powers) == len(acts),
            f"type_probs, powers, activities lengths differ: {len(probs)}, {len(powers)}, {len(acts)}",
        )
        _require(all(p >= 0 for p in probs), "type_probs must be nonnegative")
        _require(abs(sum(probs) - 1.0) <= 1e-12, f"type_probs must sum to 1, got {sum(probs)!r}")
        _require(all(w > 0 for w in powers), "powers must be positive")
        _require(all(0 <= k <= 1 for k in acts), "activities must lie in [0, 1]")

    @property
    def V(self) -> int:
        return len(self.type_probs)

    @property
    def densities(self) -> np.ndarray:
        """Per-type densities lambda_v."""
        return self.lam * np.asarray(self.type_probs)


@dataclass(frozen=True)
class SchemeConfig:
    """Rate adaptation scheme: ``"static"`` at index ``n`` or ``"dynamic"``."""

    kind: str
    n: Optional[int] = None
    d: float = 0.0
    u: float = 0.0

    def __post_init__(self):
        _require(self.kind in ("static", "dynamic"), f"unknown scheme kind {self.kind!r}")
        if self.kind == "static":
            _require(self.n is not None and int(self.n) == self.n and self.n >= 1,
                     f"static scheme needs a rate index n >= 1, got {self.n!r}")
            object.__setattr__(self, "n", int(self.n))
        else:
            _require(0 <= self.d <= 1, f"d must lie in [0, 1], got {self.d!r}")
            _require(0 <= self.u <= 1, f"u must lie in [0, 1], got {self.u!r}")

    @classmethod
    def static(cls, n: int) -> "SchemeConfig":
        return cls("static", n=n)

    @classmethod
    def dynamic(cls, d: float, u: float) -> "SchemeConfig":
        return cls("dynamic", d=d, u=u)

    def check(self, link: LinkConfig) -> None:
        if self.kind == "static":
            _require(self.n <= link.N, f"static rate index {self.n} exceeds N={link.N}")

    @property
    def label(self) -> str:
        return f"static{self.n}" if self.kind == "static" else "dynamic"


@dataclass(frozen=True)
class RateLadder:
    """Rates R_1 > ... > R_N [bit/s] and their SIR thresholds theta_n."""

    rates: tuple
    thresholds: tuple

    @property
    def N(self) -> int:
        return len(self.rates)

    def theta(self, n: int) -> float:
        """Threshold of the 1-based rate index ``n``."""
        return self.thresholds[n - 1]


def build_rate_ladder(link: LinkConfig) -> RateLadder:
    """Rates ``L/(n T_s)`` and thresholds ``2**(R_n/(zeta W)) - 1``."""
    rates = []
    thresholds = []
    for n in range(1, link.N + 1):
        rate = link.L / (n * link.T_s)
        exponent = rate / (link.zeta * link.W)
        if not exponent < _MAX_EXPONENT:
            raise ConfigError(
                f"infeasible rate ladder: SIR threshold exponent {exponent:g} at n={n} overflows"
            )
        rates.append(rate)
        thresholds.append(2.0 ** exponent - 1.0)
    return RateLadder(tuple(rates), tuple(thresholds))


def phase_count(N: int) -> int:
    """Number of phases N(N+1)/2 of the dynamic-rate chain."""
    return N * (N + 1) // 2


def default_paper_config(w_t: float = 10e-3):
    """Reference scenario: 40-byte packets, 5 rates, 8 classes, 3 device types.

    ``w_t`` is the intended transmit power in Watts (10 mW for the meta
    distribution curves, 50 mW for the latency studies).
    """
    link = LinkConfig(
        w_t=w_t,
        R_o=20.0,
        eta=4.0,
        alpha=0.04,
        L=320.0,
        W=100e3,
        zeta=0.8,
        T_s=1e-3,
        N=5,
        M=8,
    )
    fld = FieldConfig(
        lam=1e3 / 1e6,
        type_probs=(1 / 3, 1 / 3, 1 / 3),
        powers=(10e-3, 7e-3, 5e-3),
        activities=(0.1, 0.3, 0.5),
    )
    scheme = SchemeConfig.dynamic(d=0.3, u=0.1)
    return link, fld, scheme
