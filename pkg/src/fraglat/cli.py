"""Command-line entry point.

    fraglat meta           meta distribution curves, class grid, beta shapes
    fraglat latency-class  per-class latency for every static rate and dynamic
    fraglat latency-size   spatially averaged latency over a packet-size sweep
    fraglat simulate       one slotted-queue simulation run

All subcommands share ``--config``, ``--seed``, ``--out`` and repeatable
``--override section.key=value``.  The output directory defaults to
``$FRAGLAT_OUT`` or ``./results``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import experiments as ex
from .config import load_config, parse_override
from .errors import FraglatError

log = logging.getLogger("fraglat")

OUT_ENV = "FRAGLAT_OUT"


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="TOML configuration file")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUT_ENV} or ./results)")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config entry, e.g. link.w_t_mW=50")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fraglat", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("meta", help="meta distribution: beta approximation vs. simulation")
    _common(p)
    p.add_argument("--realizations", type=int, help="field realizations (default sim.realizations)")

    p = sub.add_parser("latency-class", help="per-class latency, static rates and dynamic scheme")
    _common(p)

    p = sub.add_parser("latency-size", help="average latency over a sweep (default link.L_bytes=20:120:5)")
    _common(p)
    p.add_argument("--sweep", default="link.L_bytes=20:120:5", metavar="KEY=SPEC",
                   help="sweep axis; SPEC is start:stop:step or v1,v2,...")

    p = sub.add_parser("simulate", help="single slotted-queue simulation")
    _common(p)
    p.add_argument("--tsp-class", type=int, help="drive the queue by the class representatives instead of a field")
    return parser


def _spec(args) -> ex.ExperimentSpec:
    overrides = dict(parse_override(o) for o in args.override)
    sweep = None
    if getattr(args, "sweep", None):
        key, value = parse_override(args.sweep)
        sweep = (key, ex.sweep_values(value))
    out = args.out or Path(os.environ.get(OUT_ENV, "results"))
    return ex.ExperimentSpec(ex.Experiment(args.command), overrides, sweep, out, args.seed)


def run(args) -> list:
    spec = _spec(args)
    cfg = load_config(args.config, spec.overrides)
    written = []

    def emit(table):
        written.append(ex.write_table(table, cfg, spec.seed, spec.out))

    if spec.experiment is ex.Experiment.META_CURVES:
        res = ex.run_meta_curves(cfg, spec.seed, args.realizations)
        for name in ("meta_curves", "tsp_grid", "beta_params"):
            emit(res[name])
        for n, sup in res["sup_distance"].items():
            log.info("rate %d: sup distance %.4f", n, sup)
    elif spec.experiment is ex.Experiment.LATENCY_PER_CLASS:
        emit(ex.run_latency_per_class(cfg)["latency_per_class"])
    elif spec.experiment is ex.Experiment.LATENCY_VS_PACKET_SIZE:
        key, values = spec.sweep
        res = ex.run_latency_vs_packet_size(cfg, key, values)
        emit(res["latency_vs_size"])
        emit(res["optimal_static"])
    else:
        res = ex.run_simulate(cfg, spec.seed, args.tsp_class)
        emit(res["latency_samples"])
        side = Path(spec.out) / "latency_samples.meta.json"
        payload = {"config": cfg.raw, **res["metadata"]}
        side.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(side)
        log.info("mean latency %.4f slots over %d packets", res["result"].mean_latency, len(res["result"].latencies))
    return written


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        for path in run(args):
            print(path)
    except (FraglatError, OSError) as exc:
        print(f"fraglat: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
