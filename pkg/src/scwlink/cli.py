"""Command-line front end.

Subcommands: ``codebook`` (enumerate or sample and write a codebook file),
``rate`` (code rate report), ``cir`` (impulse-response table), ``bounds``
(analytical bound curves without simulation), ``simulate`` (Monte Carlo
experiment).  Every run that writes data also writes a JSON manifest echoing
the resolved configuration and seed, so results can be reproduced exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .channel import ChannelError, PhysicalParams, cir_expected_count
from .codebook import (
    CodebookError,
    SymbolAlphabet,
    WeightVector,
    code_rate,
    enumerate_full_scw,
    sample_partial_codebook,
)
from .sim import (
    ConfigError,
    ExperimentConfig,
    config_from_mapping,
    config_to_mapping,
    run_ber_experiment,
    run_cer_experiment,
    write_series_csv,
)
from . import bounds as bounds_mod
from .channel import Csi
from .codebook import distance_spectrum

WORKERS_ENV = "SCWLINK_WORKERS"


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _parse_weights(text: str) -> WeightVector:
    try:
        return WeightVector(tuple(int(x) for x in text.split(",")))
    except ValueError as exc:
        raise CodebookError(f"bad weights {text!r}: {exc}") from exc


def _write_manifest(path, subcommand: str, config_echo: dict, seed, outputs, t0: float) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": config_echo,
        "seed": seed,
        "outputs": [str(p) for p in outputs],
        "duration_s": round(time.perf_counter() - t0, 3),
        "version": __version__,
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_codebook(args) -> int:
    weights = _parse_weights(args.weights)
    alphabet = SymbolAlphabet.uniform(args.levels)
    t0 = time.perf_counter()
    book = enumerate_full_scw(alphabet, weights, cap=args.cap)
    if args.partial is not None:
        book = sample_partial_codebook(book, args.partial, args.seed)
    book.write_text(args.out)
    report = code_rate(weights, alphabet)
    print(f"M={book.size} rate={report.rate:.4f} wrote {args.out}")
    _write_manifest(
        str(args.out) + ".manifest.json",
        "codebook",
        {"levels": args.levels, "weights": list(weights.counts),
         "partial": args.partial, "cap": args.cap},
        args.seed,
        [args.out],
        t0,
    )
    return 0


def _cmd_rate(args) -> int:
    weights = _parse_weights(args.weights)
    alphabet = SymbolAlphabet.uniform(args.levels)
    report = code_rate(weights, alphabet)
    print(f"M={report.size}")
    print(f"rate={report.rate:.6f}")
    print(f"asymptotic_rate={report.asymptotic_rate:.6f}")
    print(f"release_fraction={report.release_fraction:.6f}")
    return 0


def _load_params(path) -> PhysicalParams:
    if path is None:
        return PhysicalParams()
    with open(path) as fh:
        return PhysicalParams.from_mapping(json.load(fh))


def _cmd_cir(args) -> int:
    params = _load_params(args.params)
    t0 = time.perf_counter()
    if args.times:
        times = [float(x) for x in args.times.split(",")]
    else:
        times = list(np.geomspace(args.t_min, args.t_max, args.t_count))
    values = [cir_expected_count(params, t) for t in times]
    with open(args.out, "w", newline="\n") as fh:
        fh.write("t,expected_count\n")
        for t, v in zip(times, values):
            fh.write(f"{t!r},{v!r}\n")
    print(f"wrote {len(times)} rows to {args.out}")
    _write_manifest(
        str(args.out) + ".manifest.json",
        "cir",
        {"params": args.params and str(args.params), "times": times},
        None,
        [args.out],
        t0,
    )
    return 0


def _apply_overrides(data: dict, sets: list[str]) -> dict:
    """Apply ``--set dotted.path=json_value`` overrides to a config mapping."""
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {part} is not a mapping")
        node[parts[-1]] = value
    return data


def _load_config(args) -> ExperimentConfig:
    with open(args.config) as fh:
        data = json.load(fh)
    data = _apply_overrides(data, args.set or [])
    config = config_from_mapping(data)
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    elif WORKERS_ENV in os.environ:
        overrides["workers"] = _default_workers()
    return replace(config, **overrides) if overrides else config


def _cmd_simulate(args) -> int:
    config = _load_config(args)
    t0 = time.perf_counter()
    series = run_cer_experiment(config) if config.mode == "cer" else run_ber_experiment(config)
    csv_path = args.out + ".csv"
    manifest_path = args.out + ".manifest.json"
    write_series_csv(series, csv_path)
    _write_manifest(
        manifest_path, "simulate", config_to_mapping(config), config.seed, [csv_path], t0
    )
    print(f"wrote {csv_path} and {manifest_path}")
    return 0


def _cmd_bounds(args) -> int:
    config = _load_config(args)
    if config.mode != "cer":
        raise ConfigError("mode: bound curves need a cer configuration")
    if not config.bounds:
        raise ConfigError("bounds: at least one bound must be requested")
    t0 = time.perf_counter()
    from .sim import _build_codebook, _point_bounds, _validate_bound_applicability

    codebook = _build_codebook(config)
    _validate_bound_applicability(config, codebook)
    rows = []
    for pi, snr_db in enumerate(config.snr_grid_db):
        nominal_cs = config.channel.c_n * 10.0 ** (snr_db / 10.0)
        rows.append((snr_db, dict(_point_bounds(config, codebook, nominal_cs, pi))))
    names = sorted(rows[0][1]) if rows else []
    csv_path = args.out + ".csv"
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(",".join(["snr_db"] + names) + "\n")
        for snr_db, vals in rows:
            fh.write(",".join([repr(float(snr_db))] + [repr(vals[n]) for n in names]) + "\n")
    _write_manifest(
        args.out + ".manifest.json", "bounds", config_to_mapping(config),
        config.seed, [csv_path], t0,
    )
    print(f"wrote {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scwlink",
        description="Constant-weight coded molecular links: codebooks, "
        "detection, bounds, and Monte Carlo experiments.",
    )
    parser.add_argument("--version", action="version", version=f"scwlink {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("codebook", help="enumerate (and optionally sample) a codebook")
    p.add_argument("--levels", type=int, required=True, help="alphabet size L")
    p.add_argument("--weights", required=True, help="comma-separated per-level counts")
    p.add_argument("--partial", type=int, default=None, help="sample this many codewords")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=1_000_000)
    p.add_argument("--out", required=True, help="output codebook file")
    p.set_defaults(func=_cmd_codebook)

    p = sub.add_parser("rate", help="code rate report for a weight vector")
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--weights", required=True)
    p.set_defaults(func=_cmd_rate)

    p = sub.add_parser("cir", help="expected-count impulse response table")
    p.add_argument("--params", default=None, help="JSON file of physical parameters")
    p.add_argument("--times", default=None, help="comma-separated times in seconds")
    p.add_argument("--t-min", type=float, default=1e-5)
    p.add_argument("--t-max", type=float, default=1e-2)
    p.add_argument("--t-count", type=int, default=50)
    p.add_argument("--out", required=True, help="output CSV file")
    p.set_defaults(func=_cmd_cir)

    for name, help_text in (
        ("simulate", "run a Monte Carlo experiment from a config file"),
        ("bounds", "evaluate analytical bounds from a config file, no simulation"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", required=True, help="output path prefix")
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None,
                       help=f"worker processes (default from ${WORKERS_ENV} or 1)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config field by dotted path")
        p.set_defaults(func=_cmd_simulate if name == "simulate" else _cmd_bounds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CodebookError, ChannelError, ConfigError, bounds_mod.BoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
