"""TOML configuration files.

Files use engineering units; every key carries its unit in its name and is
converted to SI exactly once, in :func:`resolve`::

    [link]
    w_t_mW = 50.0          # transmit power
    R_o_m = 20.0           # link distance
    eta = 4.0              # path-loss exponent
    alpha = 0.04           # arrival probability per slot
    L_bytes = 40.0         # packet size
    W_kHz = 100.0          # bandwidth
    zeta = 0.8             # fraction of Shannon capacity
    T_s_ms = 1.0           # slot duration
    N = 5                  # rates
    M = 8                  # TSP classes

    [field]
    lambda_per_km2 = 1000.0
    type_probs = [0.3333333333333333, 0.3333333333333333, 0.3333333333333334]
    powers_mW = [10.0, 7.0, 5.0]
    activities = [0.1, 0.3, 0.5]

    [scheme]
    kind = "dynamic"       # or "static"
    n = 1                  # static rate index
    d = 0.3
    u = 0.1

    [sim]
    realizations = 10000
    window_m = 5000.0      # field window for meta-distribution runs
    queue_window_m = 500.0 # field window for per-slot queue simulation
    horizon_slots = 1000000
    warmup_fraction = 0.1
"""

from __future__ import annotations

import copy
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .model import FieldConfig, LinkConfig, SchemeConfig

DEFAULTS = {
    "link": {
        "w_t_mW": 10.0,
        "R_o_m": 20.0,
        "eta": 4.0,
        "alpha": 0.04,
        "L_bytes": 40.0,
        "W_kHz": 100.0,
        "zeta": 0.8,
        "T_s_ms": 1.0,
        "N": 5,
        "M": 8,
    },
    "field": {
        "lambda_per_km2": 1000.0,
        "type_probs": [1 / 3, 1 / 3, 1 / 3],
        "powers_mW": [10.0, 7.0, 5.0],
        "activities": [0.1, 0.3, 0.5],
    },
    "scheme": {"kind": "dynamic", "n": 1, "d": 0.3, "u": 0.1},
    "sim": {
        "realizations": 10_000,
        "window_m": 5000.0,
        "queue_window_m": 500.0,
        "horizon_slots": 1_000_000,
        "warmup_fraction": 0.1,
    },
}


@dataclass(frozen=True)
class SimSettings:
    realizations: int
    window_radius: float
    queue_window_radius: float
    horizon: int
    warmup: int


@dataclass(frozen=True)
class Config:
    link: LinkConfig
    field: FieldConfig
    scheme: SchemeConfig
    sim: SimSettings
    raw: dict

    def to_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True)


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in out:
            raise ConfigError(f"unknown configuration key {where!r}")
        if isinstance(out[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be a table")
            out[key] = _merge(out[key], value, where + ".")
        else:
            out[key] = _coerce(where, out[key], value)
    return out


def _coerce(key: str, template, value):
    """Type-check ``value`` against the default stored at ``key``."""
    try:
        if isinstance(template, bool):
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes")
            return bool(value)
        if isinstance(template, int):
            if isinstance(value, str):
                value = float(value)
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(template, float):
            return float(value)
        if isinstance(template, list):
            if isinstance(value, str):
                value = [v for v in value.replace("[", "").replace("]", "").split(",") if v.strip()]
            return [float(v) for v in value]
        if isinstance(template, str):
            return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"value {value!r} does not fit key {key!r} (expected {type(template).__name__})") from None
    raise ConfigError(f"unsupported configuration key {key!r}")


def parse_override(text: str):
    """Split ``section.key=value`` into ``("section.key", "value")``."""
    key, sep, value = text.partition("=")
    if not sep or "." not in key:
        raise ConfigError(f"override must look like section.key=value, got {text!r}")
    return key.strip(), value.strip()


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``{"section.key": value}`` pairs on top of a raw config dict."""
    out = copy.deepcopy(raw)
    for key, value in dict(overrides).items():
        section, _, name = key.partition(".")
        if section not in DEFAULTS or name not in DEFAULTS[section]:
            raise ConfigError(f"unknown configuration key {key!r}")
        out[section][name] = _coerce(key, DEFAULTS[section][name], value)
    return out


def load_raw(path=None) -> dict:
    """Defaults merged with the TOML file at ``path`` (if given)."""
    if path is None:
        return copy.deepcopy(DEFAULTS)
    p = Path(path)
    try:
        with p.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {p}: {exc}") from exc
    return _merge(DEFAULTS, data)


def resolve(raw: dict) -> Config:
    """Convert a raw (file-unit) dict into validated SI config objects."""
    lk, fd, sc, sm = raw["link"], raw["field"], raw["scheme"], raw["sim"]
    link = LinkConfig(
        w_t=lk["w_t_mW"] * 1e-3,
        R_o=lk["R_o_m"],
        eta=lk["eta"],
        alpha=lk["alpha"],
        L=lk["L_bytes"] * 8.0,
        W=lk["W_kHz"] * 1e3,
        zeta=lk["zeta"],
        T_s=lk["T_s_ms"] * 1e-3,
        N=lk["N"],
        M=lk["M"],
    )
    probs = list(fd["type_probs"])
    if probs and math.isclose(sum(probs), 1.0, abs_tol=1e-9):
        # Tolerate rounding in hand-written decimal probabilities.
        probs = [p / sum(probs) for p in probs]
    field = FieldConfig(
        lam=fd["lambda_per_km2"] * 1e-6,
        type_probs=tuple(probs),
        powers=tuple(w * 1e-3 for w in fd["powers_mW"]),
        activities=tuple(fd["activities"]),
    )
    if sc["kind"] == "static":
        scheme = SchemeConfig.static(sc["n"])
    elif sc["kind"] == "dynamic":
        scheme = SchemeConfig.dynamic(sc["d"], sc["u"])
    else:
        raise ConfigError(f"scheme.kind must be 'static' or 'dynamic', got {sc['kind']!r}")
    scheme.check(link)
    horizon = sm["horizon_slots"]
    if sm["realizations"] < 1 or horizon < 1 or sm["window_m"] <= 0 or sm["queue_window_m"] <= 0:
        raise ConfigError("sim settings must be positive")
    if not 0 <= sm["warmup_fraction"] < 1:
        raise ConfigError("sim.warmup_fraction must lie in [0, 1)")
    sim = SimSettings(sm["realizations"], sm["window_m"], sm["queue_window_m"], horizon, int(horizon * sm["warmup_fraction"]))
    return Config(link, field, scheme, sim, copy.deepcopy(raw))


def load_config(path=None, overrides=None) -> Config:
    raw = load_raw(path)
    if overrides:
        raw = apply_overrides(raw, overrides)
    return resolve(raw)


def flat_items(raw: dict):
    """``("section.key", value)`` pairs in a stable order, for CSV headers."""
    for section in sorted(raw):
        for key in sorted(raw[section]):
            yield f"{section}.{key}", raw[section][key]
