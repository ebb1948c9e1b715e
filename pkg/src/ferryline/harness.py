"""Command line front end.

Usage::

    ferryline validate --config exp.json
    ferryline synth    --config exp.json [--seed N] [--out DIR]
    ferryline run      --config exp.json [--seed N] [--threads N] [--out DIR]

Exit status: 0 success, 1 configuration error, 2 data error, 3 internal
invariant violation. ``FERRYLINE_LOG`` sets the log level (default WARNING).
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from pathlib import Path

import jsonschema

from . import __version__, reports
from .ensemble import StreamOrderError
from .geocell import DEFAULT_PRECISION
from .simulator import SELECTORS, InvariantViolation, Report, RunConfig, run_experiment
from .traces import (SyntheticSpec, SyntheticSpecError, TraceError, TraceSet, load_csv,
                     replicate_days, synthesize, write_csv)
from .world import WorldConfig, WorldError, build_world

logger = logging.getLogger("ferryline")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

DEFAULTS = {
    "precision": DEFAULT_PRECISION,
    "days": [5, 10, 15, 20, 25],
    "selectors": list(SELECTORS),
    "output_dir": "out",
    "period_minutes": 30,
    "waiting_mode": "per_algorithm",
    "p_low": 2,
    "p_high": 95,
    "seed": 0,
    "max_malformed_fraction": 0.01,
}

_DELAY_SCHEMA = {
    "type": "object",
    "required": ["dist"],
    "properties": {"dist": {"enum": ["constant", "uniform", "lognormal", "pareto", "mixture"]}},
}
_BLOCK_SCHEMA = {
    "type": "object",
    "required": ["rate_per_min", "delay"],
    "properties": {
        "rate_per_min": {"type": "number", "minimum": 0},
        "pass_prob": {"type": "number", "minimum": 0, "maximum": 1},
        "delay": _DELAY_SCHEMA,
    },
}
_SYNTHETIC_SCHEMA = {
    "type": "object",
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "precision": {"type": "integer", "minimum": 1, "maximum": 12},
        "origin": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "start_time": {"type": "integer", "minimum": 0},
        "horizon_minutes": {"type": "number"},
        "blocks": {"type": "array", "items": _BLOCK_SCHEMA, "minItems": 1},
        "segments": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["duration_minutes", "blocks"],
                "properties": {
                    "duration_minutes": {"type": "number"},
                    "blocks": {"type": "array", "items": _BLOCK_SCHEMA, "minItems": 1},
                },
            },
        },
    },
    "oneOf": [{"required": ["segments"]}, {"required": ["horizon_minutes", "blocks"]}],
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ferryline experiment",
    "type": "object",
    "required": ["input"],
    "additionalProperties": False,
    "properties": {
        "input": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"csv": {"type": "string"}, "synthetic": _SYNTHETIC_SCHEMA},
            "oneOf": [{"required": ["csv"]}, {"required": ["synthetic"]}],
        },
        "precision": {"type": "integer", "minimum": 1, "maximum": 12},
        "days": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "selectors": {"type": "array", "items": {"enum": list(SELECTORS)}, "minItems": 1,
                      "uniqueItems": True},
        "output_dir": {"type": "string"},
        "period_minutes": {"type": "number", "exclusiveMinimum": 0},
        "waiting_mode": {"enum": ["per_algorithm", "shared"]},
        "p_low": {"type": "number", "exclusiveMinimum": 0, "maximum": 100},
        "p_high": {"type": "number", "exclusiveMinimum": 0, "maximum": 100},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "max_malformed_fraction": {"type": "number", "minimum": 0, "maximum": 1},
    },
}


class ConfigError(Exception):
    pass


def load_config(path: str | os.PathLike) -> dict:
    """Read, validate and fill defaults. Relative CSV paths resolve against the config's directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"{path}: {where}: {exc.message}") from None
    cfg = {**copy.deepcopy(DEFAULTS), **raw}
    if "csv" in cfg["input"]:
        csv_path = Path(cfg["input"]["csv"])
        if not csv_path.is_absolute():
            cfg["input"]["csv"] = str(path.parent / csv_path)
    else:
        try:
            SyntheticSpec.from_dict(cfg["input"]["synthetic"])
        except (SyntheticSpecError, ValueError) as exc:
            raise ConfigError(f"{path}: input/synthetic: {exc}") from None
    if cfg["p_low"] > cfg["p_high"]:
        raise ConfigError(f"{path}: p_low must not exceed p_high")
    return cfg


def run_config(cfg: dict, selector: str, days: int, seed: int) -> RunConfig:
    return RunConfig(
        selector=selector,
        period=int(round(cfg["period_minutes"] * 60)),
        waiting_mode=cfg["waiting_mode"],
        p_low=cfg["p_low"],
        p_high=cfg["p_high"],
        days=days,
        seed=seed,
    )


def load_trace(cfg: dict) -> TraceSet:
    if "csv" in cfg["input"]:
        return load_csv(cfg["input"]["csv"], cfg["max_malformed_fraction"])
    spec = SyntheticSpec.from_dict(cfg["input"]["synthetic"])
    trace, _ = synthesize(spec)
    return trace


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def execute(cfg: dict, out_dir: Path, seed: int, threads: int) -> dict[tuple[str, int], Report]:
    """Run every (selector, days) pair and write all report files into ``out_dir``."""
    trace = load_trace(cfg)
    digest = trace.digest()
    out_dir.mkdir(parents=True, exist_ok=True)
    wcfg = WorldConfig(cfg["precision"], cfg["p_low"], cfg["p_high"])
    meta = {"experiment": {k: v for k, v in cfg.items() if k != "output_dir"},
            "version": __version__}

    reports_by_run: dict[tuple[str, int], Report] = {}
    switching: dict[str, dict[int, list]] = {}
    for days in cfg["days"]:
        world = build_world(replicate_days(trace, days), wcfg)
        if days == cfg["days"][0]:
            _write(out_dir / "world.json", world.to_json() + "\n")
        for selector in cfg["selectors"]:
            rcfg = run_config(cfg, selector, days, seed)
            report = run_experiment(world, rcfg, threads=threads, trace_digest=digest)
            reports_by_run[(selector, days)] = report
            stem = f"{selector}_{days}d"
            _write(out_dir / f"report_{stem}.json", reports.report_to_json(report, meta))
            _write(out_dir / f"report_{stem}.csv", reports.blocks_csv(report))
            _write(out_dir / f"hourly_{stem}.csv", reports.hourly_csv(report))
            if selector == "ensemble":
                for b, m in report.blocks.items():
                    switching.setdefault(b, {})[days] = list(m.switches)
            logger.info("%s: %d blocks", stem, len(report.blocks))
    for b, by_days in switching.items():
        _write(out_dir / f"switching_{b}.csv", reports.switching_csv(by_days, trace.start))
    _write(out_dir / "comparison.csv", reports.comparison_csv(reports_by_run))
    return reports_by_run


def cmd_validate(args, cfg: dict) -> int:
    print(f"{args.config}: ok ({len(cfg['selectors'])} selectors x {len(cfg['days'])} day spans)")
    return EXIT_OK


def cmd_run(args, cfg: dict) -> int:
    seed = cfg["seed"] if args.seed is None else args.seed
    out = Path(args.out or cfg["output_dir"])
    threads = args.threads or os.cpu_count() or 1
    runs = execute(cfg, out, seed, threads)
    print(f"wrote {len(runs)} reports to {out}")
    return EXIT_OK


def cmd_synth(args, cfg: dict) -> int:
    if "synthetic" not in cfg["input"]:
        raise ConfigError("synth needs an input/synthetic section")
    spec = SyntheticSpec.from_dict(cfg["input"]["synthetic"])
    trace, summary = synthesize(spec, args.seed)
    out = Path(args.out or cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    path = out / "trace.csv"
    write_csv(trace, path)
    minutes = [(b - spec.start_time) / 60 for b in summary.segment_boundaries]
    print(f"trace: {path} ({len(trace)} records)")
    print(f"scmc: {summary.scmc}")
    print(f"blocks: {summary.blocks} ({', '.join(summary.block_cells)})")
    print(f"arrivals: {summary.arrivals}, candidates: {summary.candidates} "
          f"(fraction {summary.candidate_fraction:.3f}), anchors: {summary.anchors}")
    print("segment boundaries (min): " + ", ".join(f"{m:g}" for m in minutes))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ferryline", description="Opportunistic data-ferry selection simulator")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (
        ("run", cmd_run, "simulate every selector and day span"),
        ("synth", cmd_synth, "write a synthetic trace CSV"),
        ("validate", cmd_validate, "check the config only"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True)
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("FERRYLINE_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (ConfigError, SyntheticSpecError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TraceError, WorldError, StreamOrderError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvariantViolation as exc:
        logger.exception("invariant violated")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        # e.g. a one-day trace that spans more than a day cannot be replicated
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
