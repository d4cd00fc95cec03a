"""Experiment drivers behind the CLI subcommands.

Each driver takes a resolved :class:`~fraglat.config.Config` and returns one
or more :class:`Table` objects; writing them is the caller's business.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import chains, meta, sim
from .config import Config, apply_overrides, flat_items, resolve
from .errors import ConfigError
from .model import build_rate_ladder


class Experiment(enum.Enum):
    META_CURVES = "meta"
    LATENCY_PER_CLASS = "latency-class"
    LATENCY_VS_PACKET_SIZE = "latency-size"
    CUSTOM = "simulate"


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: Experiment
    overrides: dict = field(default_factory=dict)
    sweep: Optional[tuple] = None   # (key, [values...])
    out: Path = Path("results")
    seed: int = 0


@dataclass
class Table:
    name: str
    header: tuple
    rows: list
    notes: dict = field(default_factory=dict)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    return str(value)


def render_csv(table: Table, cfg: Config, seed) -> str:
    """CSV text with the resolved config and seed embedded as ``#`` comments."""
    lines = [f"# fraglat table: {table.name}", f"# seed = {seed}"]
    for key, value in flat_items(cfg.raw):
        lines.append(f"# config.{key} = {value}")
    for key, value in table.notes.items():
        lines.append(f"# {key} = {_fmt(value)}")
    lines.append(",".join(table.header))
    for row in table.rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_table(table: Table, cfg: Config, seed, out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{table.name}.csv"
        path.write_text(render_csv(table, cfg, seed), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {table.name} table under {out}: {exc}") from exc
    return path


# ---------------------------------------------------------------------------


def run_meta_curves(cfg: Config, seed: int, n_realizations: Optional[int] = None,
                    gammas: np.ndarray = sim.GAMMA_GRID):
    """Beta-approximated vs. simulated meta distribution per rate, plus the class grid."""
    link, fld = cfg.link, cfg.field
    n_real = cfg.sim.realizations if n_realizations is None else n_realizations
    dist = meta.meta_distribution(link, fld)
    emp = sim.empirical_meta(link, fld, n_real, seed, cfg.sim.window_radius, gammas)
    rows = []
    sups = {}
    for n in range(1, dist.N + 1):
        analytic = np.atleast_1d(meta.meta_ccdf(dist, n, gammas))
        diff = np.abs(analytic - emp.ccdf[n - 1])
        sups[n] = float(diff.max())
        for g, a, e, dd in zip(gammas, analytic, emp.ccdf[n - 1], diff):
            rows.append((n, float(g), float(a), float(e), float(dd), sups[n]))
    curves = Table(
        "meta_curves",
        ("rate_index", "gamma", "analytic_ccdf", "empirical_ccdf", "abs_diff", "sup_distance"),
        rows,
        {"realizations": n_real},
    )
    grid = meta.build_grid(dist, link.M)
    return {
        "meta_curves": curves,
        "tsp_grid": Table("tsp_grid", meta.GRID_CSV_HEADER, list(grid.csv_rows())),
        "beta_params": Table("beta_params", meta.BETA_CSV_HEADER, list(meta.beta_rows(dist))),
        "sup_distance": sups,
    }


def _adaptation(cfg: Config):
    return float(cfg.raw["scheme"]["d"]), float(cfg.raw["scheme"]["u"])


def latency_reports(cfg: Config, grid: Optional[meta.TspGrid] = None):
    """Static reports for n = 1..N followed by the dynamic report."""
    link = cfg.link
    if grid is None:
        grid = meta.tsp_grid(link, cfg.field)
    d, u = _adaptation(cfg)
    reports = [chains.latency_static(grid, link, n) for n in range(1, link.N + 1)]
    reports.append(chains.latency_dynamic(grid, link, d, u))
    return reports


def run_latency_per_class(cfg: Config):
    reports = latency_reports(cfg)
    threshold = 1.0 / cfg.link.alpha
    rows = [row + (threshold,) for rep in reports for row in rep.csv_rows()]
    return {"latency_per_class": Table("latency_per_class", chains.LATENCY_CSV_HEADER + ("stability_threshold",), rows)}


def sweep_values(spec: str):
    """``"20:120:5"`` (inclusive range) or ``"20,40,60"``."""
    if ":" in spec:
        parts = [float(x) for x in spec.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"range sweep must be start:stop:step, got {spec!r}")
        start, stop, step = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(count)]
    return [float(x) for x in spec.split(",") if x.strip()]


SIZE_CSV_HEADER = ("sweep_key", "sweep_value", "scheme", "rate_index_or_dyn",
                   "mean_latency", "stable_mean_latency", "unstable_fraction")


def run_latency_vs_packet_size(cfg: Config, key: str = "link.L_bytes", values=None):
    """Spatially averaged latency per scheme at each sweep point."""
    if values is None:
        values = list(range(20, 121, 5))
    rows = []
    best = []
    for value in values:
        point = resolve(apply_overrides(cfg.raw, {key: value}))
        reports = latency_reports(point)
        for rep in reports:
            rows.append((key, value, rep.scheme, rep.label, rep.average, rep.stable_average, rep.unstable_fraction))
        static = [r.average for r in reports if r.scheme == "static"]
        best.append((key, value, int(np.argmin(static)) + 1, float(np.min(static)), reports[-1].average))
    return {
        "latency_vs_size": Table("latency_vs_size", SIZE_CSV_HEADER, rows),
        "optimal_static": Table(
            "optimal_static", ("sweep_key", "sweep_value", "best_static_n", "best_static_latency", "dynamic_latency"), best
        ),
    }


def run_simulate(cfg: Config, seed: int, tsp_class: Optional[int] = None, window_radius: Optional[float] = None):
    """One slotted-queue run.

    With ``tsp_class`` the fragments succeed with the class representatives
    of the grid; otherwise a field realization is drawn and the per-slot SIR
    is simulated directly.
    """
    link = cfg.link
    scheme = cfg.scheme
    horizon, warmup = cfg.sim.horizon, cfg.sim.warmup
    meta_info = {"seed": seed, "scheme": scheme.label, "horizon_slots": horizon, "warmup_slots": warmup}
    if tsp_class is not None:
        if not 1 <= tsp_class <= link.M:
            raise ConfigError(f"TSP class {tsp_class} outside 1..{link.M}")
        grid = meta.tsp_grid(link, cfg.field)
        result = sim.run_queue_fixed(grid.column(tsp_class), link.alpha, scheme, horizon, warmup, seed)
        meta_info["tsp_class"] = tsp_class
    else:
        radius = cfg.sim.queue_window_radius if window_radius is None else window_radius
        rng = np.random.default_rng(seed)
        real = sim.sample_field(cfg.field, radius, rng)
        result = sim.run_queue(real, link, scheme, horizon, warmup, rng)
        meta_info.update(real.metadata())
        meta_info["seed"] = seed
    meta_info.update({
        "tsp": [float(x) for x in result.tsp],
        "arrivals": result.arrivals,
        "departures": result.departures,
        "final_queue": result.final_queue,
        "divergent": bool(result.divergent),
        "mean_latency_slots": result.mean_latency,
        "recorded_packets": int(len(result.latencies)),
    })
    rows = [
        (scheme.label, i, int(r), int(z))
        for i, (r, z) in enumerate(zip(result.service_rates, result.latencies))
    ]
    table = Table("latency_samples", sim.LATENCY_SAMPLE_HEADER, rows)
    return {"latency_samples": table, "metadata": meta_info, "result": result}


def thresholds_table(cfg: Config) -> Table:
    ladder = build_rate_ladder(cfg.link)
    rows = [(n, r, t) for n, (r, t) in enumerate(zip(ladder.rates, ladder.thresholds), start=1)]
    return Table("rate_ladder", ("rate_index", "rate_bps", "theta"), rows)
