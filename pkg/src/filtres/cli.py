"""Command-line front end: config parsing, dispatch, CSV and manifest output.

Subcommands map one-to-one onto the experiment families (``fit``,
``predict``, ``classify``, ``sweep``, ``memory``) plus two small utilities
(``rank``, ``filters``).  A run reads an INI config file, applies flag
overrides, executes, and writes result CSVs plus a JSON manifest holding
the fully resolved config, the library version, and a SHA-256 digest of
every output file, so any run can be reproduced and checked byte for byte.
The ``FILTRES_SEED`` environment variable overrides the master seed.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import sys
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, FiltresError, ParameterError, ReportShapeError
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    run_classification,
    run_fitting,
    run_memory,
    run_prediction,
    run_sweep,
    write_aggregates_csv,
    write_confusion_csv,
    write_long_csv,
    write_memory_profiles_csv,
)
from .filterbank import FilterBank, bessel_bank, load_bank
from .readout import covariance_rank
from .reservoir import read_state_matrix_csv

_TASK_OF = {
    "fit": "fit_lorenz_z",
    "predict": "predict_lorenz_x",
    "classify": "classify_sprott",
    "memory": "memory",
}

# key -> (config section, attribute on ExperimentConfig, parser)
_FLOAT, _INT, _STR = float, int, str


def _grid(text: str) -> tuple[float, ...]:
    """Parse a sweep axis: 'lo:hi:count' (linspace) or a comma list."""
    text = text.strip()
    if ":" in text:
        lo, hi, count = text.split(":")
        return tuple(np.linspace(float(lo), float(hi), int(count)))
    return tuple(float(v) for v in text.split(","))


def _ridge(text: str):
    return None if text.strip() == "relative" else float(text)


_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "reservoir": {
        "node_type": ("node_type", _STR),
        "nodes": ("nodes", _INT),
        "alpha": ("alpha", _FLOAT),
        "sigma": ("sigma", _FLOAT),
        "density": ("density", _FLOAT),
        "beta": ("beta", _FLOAT),
        "mu": ("mu", _FLOAT),
        "phi": ("phi", _FLOAT),
        "input_scale": ("input_scale", _FLOAT),
        "t_s": ("t_s", _FLOAT),
        "tau_r": ("tau_R", _FLOAT),
        "impulse_len": ("impulse_len", _INT),
    },
    "filters": {
        "count": ("bank_size", _INT),
        "bank_file": (None, _STR),  # handled separately
    },
    "task": {
        "name": (None, _STR),  # cross-checked against the subcommand
        "transient": ("transient", _INT),
        "train_len": ("train_len", _INT),
        "test_len": ("test_len", _INT),
        "horizon": ("horizon", _INT),
        "trials": ("trials", _INT),
        "seed": ("master_seed", _INT),
        "ridge_lambda": ("ridge_lambda", _ridge),
        "normalize_input": ("normalize_input", _STR),
        "train_sections": ("train_sections", _INT),
        "test_sections": ("test_sections", _INT),
        "section_len": ("section_len", _INT),
        "classify_target": ("classify_target", _STR),
        "k_max": ("k_max", _INT),
        "mc_samples": ("mc_samples", _INT),
    },
    "sweep": {
        "alphas": ("alphas", _grid),
        "sigmas": ("sigmas", _grid),
        "trials": ("trials", _INT),
    },
    "output": {
        "dir": (None, _STR),
    },
}


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce and verify a run's outputs."""

    config: dict
    version: str
    master_seed: int
    started: str
    finished: str
    outputs: dict[str, str]  # relative path -> sha256 hex digest


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def write_manifest(manifest: RunManifest, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(manifest.__dict__, fh, indent=1, sort_keys=True)


def verify_manifest(path: str | Path) -> bool:
    """Recompute output digests; False on any missing or altered file."""
    path = Path(path)
    with open(path) as fh:
        payload = json.load(fh)
    for rel, digest in payload["outputs"].items():
        target = path.parent / rel
        if not target.is_file() or _sha256(target) != digest:
            return False
    return True


# --------------------------------------------------------------------------
# Config resolution: defaults < file < flags < FILTRES_SEED
# --------------------------------------------------------------------------

def _read_config_file(path: str) -> tuple[dict, dict]:
    """Return (ExperimentConfig overrides, extras) from an INI file."""
    parser = configparser.ConfigParser()
    if not Path(path).is_file():
        raise ConfigError(f"config file not found: {path}")
    parser.read(path)
    overrides: dict = {}
    extras: dict = {}
    for section in parser.sections():
        schema = _SCHEMA.get(section)
        if schema is None:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"unknown config key [{section}] {key}")
            attr, convert = schema[key]
            try:
                value = convert(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(
                    f"bad value for [{section}] {key}: {raw!r}"
                ) from exc
            if attr is None:
                extras[(section, key)] = value
            else:
                overrides[attr] = value
    return overrides, extras


def _resolve(args: argparse.Namespace, subcommand: str) -> tuple[ExperimentConfig, FilterBank | None, Path]:
    overrides: dict = {}
    extras: dict = {}
    if getattr(args, "config", None):
        overrides, extras = _read_config_file(args.config)

    named_task = extras.get(("task", "name"))
    task = _TASK_OF.get(subcommand)
    if subcommand == "sweep":
        task = named_task or "fit_lorenz_z"
        if task not in ("fit_lorenz_z", "predict_lorenz_x"):
            raise ConfigError(f"bad value for [task] name: {task!r} (sweep)")
    elif named_task is not None and named_task != task:
        raise ConfigError(
            f"[task] name {named_task!r} conflicts with subcommand {subcommand!r}"
        )
    overrides["task"] = task

    for flag, attr in (
        ("nodes", "nodes"), ("filters", "bank_size"), ("alpha", "alpha"),
        ("sigma", "sigma"), ("seed", "master_seed"), ("trials", "trials"),
        ("train_len", "train_len"), ("test_len", "test_len"),
        ("horizon", "horizon"), ("jobs", "jobs"), ("node_type", "node_type"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[attr] = value

    env_seed = os.environ.get("FILTRES_SEED")
    if env_seed is not None:
        try:
            overrides["master_seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"bad value for FILTRES_SEED: {env_seed!r}") from None

    try:
        config = ExperimentConfig(**overrides)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    bank = None
    bank_file = extras.get(("filters", "bank_file"))
    if bank_file is not None:
        bank = load_bank(bank_file)

    out_dir = Path(getattr(args, "out", None) or extras.get(("output", "dir"), "."))
    return config, bank, out_dir


# --------------------------------------------------------------------------
# Plot-data export
# --------------------------------------------------------------------------

def _need(records: list[dict], column: str, kind: str) -> None:
    if not any(rec.get(column) is not None for rec in records):
        raise ReportShapeError(f"plot kind {kind!r} needs column {column!r}")


def emit_plotdata(report: ExperimentReport, kind: str, out_dir: str | Path) -> list[Path]:
    """Write tidy per-figure-family CSVs derived from an experiment report.

    Kinds: ``error_vs_nodes``, ``ratio_grid``, ``param_heatmap``,
    ``error_rank_scatter``, ``error_memory_scatter``, ``confusion``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = [dict(r) for r in report.records if not r.get("_diverged")]
    rows: list[list] = []

    if kind == "error_vs_nodes":
        _need(records, "delta_test", kind)
        header = ["node_type", "M", "N_f", "mean_delta_test", "n_trials"]
        for agg in report.aggregates:
            if agg["mean_delta_test"] is not None:
                rows.append([agg["node_type"], agg["M"], agg["N_f"],
                             f"{agg['mean_delta_test']:.17g}", agg["n_trials"]])
    elif kind == "ratio_grid":
        _need(records, "delta_test", kind)
        header = ["node_type", "M", "N_f", "mean_error_ratio", "n_pairs"]
        rows = _ratio_rows(records, ("node_type", "M", "N_f"))
    elif kind == "param_heatmap":
        _need(records, "alpha", kind)
        _need(records, "delta_test", kind)
        header = ["alpha", "sigma", "N_f", "mean_delta_test", "n_trials"]
        for agg in report.aggregates:
            if agg["mean_delta_test"] is not None:
                rows.append([f"{agg['alpha']:.17g}", f"{agg['sigma']:.17g}",
                             agg["N_f"], f"{agg['mean_delta_test']:.17g}",
                             agg["n_trials"]])
    elif kind == "error_rank_scatter":
        _need(records, "rank_omega", kind)
        header = ["node_type", "M", "N_f", "seed", "rank", "delta_test"]
        for rec in records:
            rank = rec["rank_lambda"] if rec["N_f"] else rec["rank_omega"]
            if rank is not None and rec["delta_test"] is not None:
                rows.append([rec["node_type"], rec["M"], rec["N_f"],
                             rec["seed"], rank, f"{rec['delta_test']:.17g}"])
    elif kind == "error_memory_scatter":
        _need(records, "mc", kind)
        header = ["node_type", "M", "N_f", "seed", "mc", "delta_test"]
        delta_by_key = {
            (r["node_type"], r["M"], r["N_f"], r["seed"]): r["delta_test"]
            for r in records if r.get("delta_test") is not None
        }
        for rec in records:
            if rec.get("mc") is None:
                continue
            key = (rec["node_type"], rec["M"], rec["N_f"], rec["seed"])
            delta = delta_by_key.get(key)
            rows.append([rec["node_type"], rec["M"], rec["N_f"], rec["seed"],
                         f"{rec['mc']:.17g}",
                         "" if delta is None else f"{delta:.17g}"])
    elif kind == "confusion":
        if not report.classification:
            raise ReportShapeError("plot kind 'confusion' needs a classification report")
        paths = []
        for cls in report.classification:
            path = out_dir / f"confusion_nf{cls.n_f}.csv"
            write_confusion_csv(cls, path)
            paths.append(path)
        return paths
    else:
        raise ReportShapeError(f"unknown plot kind {kind!r}")

    path = out_dir / f"plot_{kind}.csv"
    with open(path, "w", newline="") as fh:
        import csv as _csv

        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return [path]


def _ratio_rows(records: list[dict], group_cols: tuple[str, ...]) -> list[list]:
    """Within-seed filtered/baseline error ratios, averaged per group."""
    baseline = {
        (r["node_type"], r["M"], r["alpha"], r["sigma"], r["seed"]): r["delta_test"]
        for r in records if r["N_f"] == 0 and r["delta_test"] is not None
    }
    ratios: dict[tuple, list[float]] = {}
    for rec in records:
        if rec["N_f"] == 0 or rec["delta_test"] is None:
            continue
        ref = baseline.get(
            (rec["node_type"], rec["M"], rec["alpha"], rec["sigma"], rec["seed"])
        )
        if ref:
            key = tuple(rec[c] for c in group_cols)
            ratios.setdefault(key, []).append(rec["delta_test"] / ref)
    rows = []
    for key in sorted(ratios, key=lambda k: tuple(str(v) for v in k)):
        vals = ratios[key]
        rows.append(list(key) + [f"{float(np.mean(vals)):.17g}", len(vals)])
    return rows


# --------------------------------------------------------------------------
# Subcommand execution
# --------------------------------------------------------------------------

def _run_experiment(subcommand: str, args: argparse.Namespace) -> int:
    config, bank, out_dir = _resolve(args, subcommand)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()

    runner = {
        "fit": run_fitting,
        "predict": run_prediction,
        "classify": run_classification,
        "sweep": run_sweep,
        "memory": run_memory,
    }[subcommand]
    report = runner(config, bank=bank)

    outputs: list[Path] = []
    results = out_dir / f"{subcommand}_results.csv"
    write_long_csv(report.records, results)
    outputs.append(results)
    aggregates = out_dir / f"{subcommand}_aggregates.csv"
    write_aggregates_csv(report.aggregates, aggregates)
    outputs.append(aggregates)
    if report.classification:
        outputs.extend(emit_plotdata(report, "confusion", out_dir))
    if report.memory_profiles:
        profile = out_dir / "memory_profile.csv"
        write_memory_profiles_csv(report.memory_profiles, profile)
        outputs.append(profile)
    for kind in getattr(args, "plotdata", None) or ():
        outputs.extend(emit_plotdata(report, kind, out_dir))

    manifest = RunManifest(
        config=report.config,
        version=__version__,
        master_seed=config.master_seed,
        started=started,
        finished=datetime.now(timezone.utc).isoformat(),
        outputs={
            str(p.relative_to(out_dir)): _sha256(p) for p in sorted(set(outputs))
        },
    )
    write_manifest(manifest, out_dir / "run_manifest.json")
    print(f"wrote {len(outputs)} files + run_manifest.json under {out_dir}")
    return 0


def _run_rank(args: argparse.Namespace) -> int:
    states = read_state_matrix_csv(args.input)
    report = covariance_rank(states)
    print(f"rank {report.rank}")
    print(f"tolerance {report.tolerance_used:.17g}")
    print("singular_values " + " ".join(f"{v:.17g}" for v in report.singular_values))
    return 0


def _run_filters(args: argparse.Namespace) -> int:
    bank = bessel_bank(args.order)
    taps = bank.filters[-1]
    print(f"filter {args.order}: " + " ".join(repr(float(a)) for a in taps))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="filtres",
        description="Reservoir-computing experiments with FIR filter banks.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_run(name: str, doc: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", help="INI config file")
        p.add_argument("--nodes", type=int, help="reservoir size M")
        p.add_argument("--filters", type=int, help="filter bank size (0 = none)")
        p.add_argument("--alpha", type=float, help="leak rate")
        p.add_argument("--sigma", type=float, help="spectral radius")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--trials", type=int, help="trials per condition")
        p.add_argument("--train-len", type=int, dest="train_len")
        p.add_argument("--test-len", type=int, dest="test_len")
        p.add_argument("--horizon", type=int, help="prediction horizon (steps)")
        p.add_argument("--node-type", choices=("tanh", "laser"), dest="node_type")
        p.add_argument("--jobs", type=int, help="parallel worker cap")
        p.add_argument("--out", help="output directory root")
        p.add_argument("--plotdata", action="append", metavar="KIND",
                       help="also emit tidy plot CSVs of this kind (repeatable)")
        return p

    add_run("fit", "fit Lorenz z from a Lorenz-x drive")
    add_run("predict", "predict the Lorenz x drive ahead of time")
    add_run("classify", "identify the 19 Sprott systems")
    add_run("sweep", "alpha x sigma grid sweep (leaky-tanh)")
    add_run("memory", "delayed-input memory capacity")

    p_rank = sub.add_parser("rank", help="covariance rank of a saved state matrix")
    p_rank.add_argument("--input", required=True, help="state matrix CSV")

    p_filters = sub.add_parser("filters", help="print built-in filter coefficients")
    p_filters.add_argument("--order", type=int, required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.subcommand == "rank":
            return _run_rank(args)
        if args.subcommand == "filters":
            return _run_filters(args)
        return _run_experiment(args.subcommand, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FiltresError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
