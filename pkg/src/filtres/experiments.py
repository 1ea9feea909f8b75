"""Experiment families over both reservoir types, with and without filters.

Four task pipelines share one seeded, reproducible harness:

* ``fit_lorenz_z``      -- drive with Lorenz x, fit Lorenz z, report the
                           normalized test error and covariance ranks;
* ``predict_lorenz_x``  -- same drive, target shifted ``horizon`` steps
                           into the future;
* ``classify_sprott``   -- nearest-centroid identification of the 19
                           Sprott flows from per-section readout
                           coefficients;
* ``memory``            -- delayed-reconstruction capacity under a white
                           noise drive.

Every record in a report is reproducible from the config plus the trial
index in its ``seed`` column: per-trial seeds are derived by hashing, never
drawn in sequence, so sweep cells can run in any order (or in parallel)
without changing a byte of the output CSVs.
"""

from __future__ import annotations

import csv
import io
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DivergenceError, ParameterError
from .filterbank import FilterBank, assemble_filter_matrix, bessel_bank
from .readout import (
    assemble_state_matrix,
    covariance_rank,
    evaluate_error,
    memory_capacity,
    train_ridge,
)
from .reservoir import (
    LaserReservoirSpec,
    StateMatrix,
    TanhReservoirSpec,
    build_adjacency,
    build_input_weights,
    derive_seed,
    normalize_series,
    run_laser,
    run_leaky_tanh,
)
from .signals import LorenzParams, generate_sprott, integrate_lorenz

_TRAIN_IC = (1.0, 1.0, 20.0)
_TEST_IC = (-4.2, -3.7, 24.0)
_SIGNAL_TRANSIENT = 1000  # samples dropped so a trajectory sits on its attractor

TASKS = ("fit_lorenz_z", "predict_lorenz_x", "classify_sprott", "memory")
SPROTT_LABELS = tuple("ABCDEFGHIJKLMNOPQRS")

LONG_COLUMNS = (
    "task", "node_type", "M", "N_f", "alpha", "sigma", "seed",
    "delta_train", "delta_test", "rank_omega", "rank_lambda", "mc", "pe",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved parameters for one experiment run."""

    task: str = "fit_lorenz_z"
    node_type: str = "tanh"  # tanh | laser
    nodes: int = 100
    alpha: float = 0.75
    sigma: float = 0.48
    density: float = 0.5
    bank_size: int = 0  # number of filters; 0 = reservoir only
    # laser map constants
    beta: float = 0.5
    mu: float = 0.1
    phi: float = 0.0
    input_scale: float = 1.0
    t_s: float = 7.5e-8
    tau_R: float = 1.5e-6
    impulse_len: int | None = None
    # window lengths
    transient: int = 1000
    train_len: int = 10000
    test_len: int = 10000
    horizon: int = 13
    # sweep grid
    alphas: tuple[float, ...] = ()
    sigmas: tuple[float, ...] = ()
    trials: int = 20
    # classification protocol
    train_sections: int = 100
    test_sections: int = 100
    section_len: int = 1000
    classify_target: str = "self_prediction"  # or reconstruct_input
    # memory capacity
    k_max: int = 50
    mc_samples: int = 10000
    # shared
    master_seed: int = 1
    ridge_lambda: float | None = None
    normalize_input: str = "standardize"
    jobs: int = 1

    def __post_init__(self):
        if self.task not in TASKS:
            raise ParameterError(f"unknown task {self.task!r}")
        if self.node_type not in ("tanh", "laser"):
            raise ParameterError(f"unknown node_type {self.node_type!r}")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.horizon < 0:
            raise ParameterError("horizon must be >= 0")
        if self.bank_size < 0:
            raise ParameterError("bank_size must be >= 0")
        if self.classify_target not in ("self_prediction", "reconstruct_input"):
            raise ParameterError(
                f"unknown classify_target {self.classify_target!r}"
            )
        if self.horizon >= self.train_len or self.horizon >= self.test_len:
            raise ParameterError("horizon must be shorter than the data windows")


@dataclass(frozen=True)
class ClassificationReport:
    """Reference library, confusion counts, and error probability for one condition."""

    n_f: int
    reference: np.ndarray  # 19 x n_coefficients
    confusion: np.ndarray  # 19 x 19 counts, rows = true system
    p_e: float
    p_e_resubstitution: float
    system_labels: tuple[str, ...] = SPROTT_LABELS


@dataclass(frozen=True)
class ExperimentReport:
    """Per-trial records plus per-condition aggregates for one experiment."""

    task: str
    records: tuple[dict, ...]
    aggregates: tuple[dict, ...]
    config: dict
    classification: tuple[ClassificationReport, ...] = ()
    memory_profiles: tuple[dict, ...] = ()


# --------------------------------------------------------------------------
# Shared trial machinery
# --------------------------------------------------------------------------

def _resolve_bank(config: ExperimentConfig, bank: FilterBank | None) -> FilterBank | None:
    if bank is not None:
        return bank
    return bessel_bank(config.bank_size) if config.bank_size >= 1 else None


def _prepare_signals(config: ExperimentConfig) -> dict:
    """Train/test drives (normalized) and row-aligned targets for fit/predict."""
    tau = config.horizon if config.task == "predict_lorenz_x" else 0
    n_tr = config.transient + config.train_len + tau
    n_te = config.transient + config.test_len + tau
    train = integrate_lorenz(LorenzParams(x0=_TRAIN_IC), n_tr, _SIGNAL_TRANSIENT)
    test = integrate_lorenz(LorenzParams(x0=_TEST_IC), n_te, _SIGNAL_TRANSIENT)
    x_tr, x_te = train.component("x"), test.component("x")
    drive_tr, stats = normalize_series(
        x_tr[: config.transient + config.train_len], config.normalize_input
    )
    drive_te, _ = normalize_series(
        x_te[: config.transient + config.test_len], config.normalize_input, stats
    )
    if config.task == "predict_lorenz_x":
        g_tr = x_tr[config.transient + tau:]
        g_te = x_te[config.transient + tau:]
    else:
        g_tr = train.component("z")[config.transient:]
        g_te = test.component("z")[config.transient:]
    return {"drive_tr": drive_tr, "g_tr": g_tr, "drive_te": drive_te, "g_te": g_te}


def _reservoir_runner(config: ExperimentConfig, idx: tuple, alpha: float, sigma: float):
    """Build the seeded fixed part of a reservoir and return its run closure."""
    w = build_input_weights(
        config.nodes, derive_seed(config.master_seed, "input", *idx)
    )
    if config.node_type == "tanh":
        spec = TanhReservoirSpec(
            M=config.nodes, alpha=alpha, spectral_radius=sigma,
            density=config.density,
        )
        adj = build_adjacency(
            config.nodes, config.density, sigma,
            derive_seed(config.master_seed, "adjacency", *idx),
        )
        return lambda drive: run_leaky_tanh(spec, adj, w, drive, config.transient)
    spec = LaserReservoirSpec(
        M=config.nodes, beta=config.beta, mu=config.mu, phi=config.phi,
        input_scale=config.input_scale, t_s=config.t_s, tau_R=config.tau_R,
        impulse_len=config.impulse_len,
    )
    return lambda drive: run_laser(spec, w, drive, config.transient)


def _base_record(config: ExperimentConfig, alpha, sigma, trial: int) -> dict:
    tanh = config.node_type == "tanh"
    return {
        "task": config.task,
        "node_type": config.node_type,
        "M": config.nodes,
        "N_f": 0,
        "alpha": alpha if tanh else None,
        "sigma": sigma if tanh else None,
        "seed": trial,
        "delta_train": None, "delta_test": None,
        "rank_omega": None, "rank_lambda": None,
        "mc": None, "pe": None,
    }


def _trial_records(
    config: ExperimentConfig,
    bank: FilterBank | None,
    sig: dict,
    idx: tuple,
    alpha: float | None = None,
    sigma: float | None = None,
) -> list[dict]:
    """Run one seeded condition and emit the reservoir-only record plus,
    when a bank is present, the paired filtered record from the same states."""
    alpha = config.alpha if alpha is None else alpha
    sigma = config.sigma if sigma is None else sigma
    base = _base_record(config, alpha, sigma, idx[-1])
    try:
        run = _reservoir_runner(config, idx, alpha, sigma)
        states_tr = run(sig["drive_tr"])
        states_te = run(sig["drive_te"])
    except DivergenceError:
        base["_diverged"] = True
        return [base]
    omega_tr = assemble_state_matrix(states_tr)
    omega_te = assemble_state_matrix(states_te)
    model = train_ridge(omega_tr, sig["g_tr"], config.ridge_lambda)
    rank_omega = covariance_rank(omega_tr).rank
    base.update(
        delta_train=model.training_error,
        delta_test=evaluate_error(omega_te, model, sig["g_te"]),
        rank_omega=rank_omega,
    )
    records = [base]
    if bank is not None:
        lam_tr = assemble_filter_matrix(states_tr, bank).drop_startup()
        lam_te = assemble_filter_matrix(states_te, bank).drop_startup()
        skip = bank.max_order - 1
        model_f = train_ridge(lam_tr, sig["g_tr"][skip:], config.ridge_lambda)
        filtered = dict(base)
        filtered.update(
            N_f=bank.size,
            delta_train=model_f.training_error,
            delta_test=evaluate_error(lam_te, model_f, sig["g_te"][skip:]),
            rank_omega=rank_omega,
            rank_lambda=covariance_rank(lam_tr).rank,
        )
        records.append(filtered)
    return records


def _aggregate(records: list[dict]) -> list[dict]:
    """Per-condition means/medians over trials; diverged trials are counted,
    never silently dropped."""
    groups: dict[tuple, list[dict]] = {}
    for rec in records:
        key = (rec["task"], rec["node_type"], rec["M"], rec["N_f"],
               rec["alpha"], rec["sigma"])
        groups.setdefault(key, []).append(rec)

    def _mean(vals):
        vals = [v for v in vals if v is not None]
        return statistics.fmean(vals) if vals else None

    out = []
    for key in sorted(groups, key=lambda k: tuple(str(v) for v in k)):
        recs = groups[key]
        ok = [r for r in recs if not r.get("_diverged")]
        deltas = [r["delta_test"] for r in ok if r["delta_test"] is not None]
        out.append({
            "task": key[0], "node_type": key[1], "M": key[2], "N_f": key[3],
            "alpha": key[4], "sigma": key[5],
            "n_trials": len(recs), "n_diverged": len(recs) - len(ok),
            "mean_delta_train": _mean([r["delta_train"] for r in ok]),
            "mean_delta_test": _mean(deltas),
            "median_delta_test": statistics.median(deltas) if deltas else None,
            "mean_rank_omega": _mean([r["rank_omega"] for r in ok]),
            "mean_rank_lambda": _mean([r["rank_lambda"] for r in ok]),
            "mean_mc": _mean([r["mc"] for r in ok]),
            "mean_pe": _mean([r["pe"] for r in ok]),
        })
    return out


def _snapshot(config: ExperimentConfig) -> dict:
    return asdict(config)


# --------------------------------------------------------------------------
# Fitting and prediction
# --------------------------------------------------------------------------

def run_fitting(config: ExperimentConfig, bank: FilterBank | None = None) -> ExperimentReport:
    """Fit Lorenz z from a Lorenz-x drive on held-out data, per trial seed."""
    if config.task != "fit_lorenz_z":
        raise ParameterError("config.task must be fit_lorenz_z")
    return _run_regression(config, bank)


def run_prediction(config: ExperimentConfig, bank: FilterBank | None = None) -> ExperimentReport:
    """Predict the Lorenz x drive ``horizon`` steps ahead, per trial seed."""
    if config.task != "predict_lorenz_x":
        raise ParameterError("config.task must be predict_lorenz_x")
    return _run_regression(config, bank)


def _run_regression(config: ExperimentConfig, bank: FilterBank | None) -> ExperimentReport:
    bank = _resolve_bank(config, bank)
    sig = _prepare_signals(config)
    records: list[dict] = []
    for trial in range(config.trials):
        records.extend(_trial_records(config, bank, sig, (trial,)))
    return ExperimentReport(
        config.task, tuple(records), tuple(_aggregate(records)), _snapshot(config)
    )


# --------------------------------------------------------------------------
# Parameter sweep
# --------------------------------------------------------------------------

_SWEEP_STATE: dict = {}


def _sweep_init(config: ExperimentConfig, bank: FilterBank | None, sig: dict) -> None:
    _SWEEP_STATE["payload"] = (config, bank, sig)


def _sweep_cell(job: tuple[int, int, int]) -> list[dict]:
    config, bank, sig = _SWEEP_STATE["payload"]
    ai, si, trial = job
    return _trial_records(
        config, bank, sig, (ai, si, trial),
        alpha=config.alphas[ai], sigma=config.sigmas[si],
    )


def run_sweep(config: ExperimentConfig, bank: FilterBank | None = None) -> ExperimentReport:
    """Grid of (alpha, sigma) cells for the leaky-tanh reservoir.

    Each cell runs ``trials`` independently seeded reservoirs; jobs are
    independent and scheduled across ``config.jobs`` workers, with output
    order fixed by (cell, trial) index regardless of scheduling.
    """
    if config.node_type != "tanh":
        raise ParameterError("sweeps are defined for the leaky-tanh reservoir")
    if not config.alphas or not config.sigmas:
        raise ParameterError("sweep grids must be nonempty")
    bank = _resolve_bank(config, bank)
    sig = _prepare_signals(config)
    jobs = [
        (ai, si, trial)
        for ai in range(len(config.alphas))
        for si in range(len(config.sigmas))
        for trial in range(config.trials)
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(
            max_workers=config.jobs,
            initializer=_sweep_init, initargs=(config, bank, sig),
        ) as pool:
            per_job = list(pool.map(_sweep_cell, jobs, chunksize=8))
    else:
        _sweep_init(config, bank, sig)
        per_job = [_sweep_cell(job) for job in jobs]
    records = [rec for recs in per_job for rec in recs]
    return ExperimentReport(
        config.task, tuple(records), tuple(_aggregate(records)), _snapshot(config)
    )


# --------------------------------------------------------------------------
# Sprott classification
# --------------------------------------------------------------------------

def run_classification(
    config: ExperimentConfig, bank: FilterBank | None = None
) -> ExperimentReport:
    """Identify which Sprott flow produced a signal section.

    One long trajectory per system is sliced into non-overlapping sections
    of ``transient + section_len`` samples.  Each section drives the (single,
    shared) reservoir; a ridge fit of the section's own drive -- one step
    ahead by default -- yields a coefficient vector.  Training sections
    average into a per-system reference library; test sections are assigned
    to the nearest reference by Euclidean distance over the node
    coefficients (the bias coefficient is excluded).
    """
    if config.task != "classify_sprott":
        raise ParameterError("config.task must be classify_sprott")
    bank = _resolve_bank(config, bank)
    run = _reservoir_runner(config, (0,), config.alpha, config.sigma)
    section = config.transient + config.section_len
    n_sections = config.train_sections + config.test_sections
    one_ahead = config.classify_target == "self_prediction"

    # coefficient stacks: condition -> system -> list of coefficient vectors
    conditions: list[int] = [0] + ([bank.size] if bank is not None else [])
    coefs: dict[int, list[list[np.ndarray]]] = {c: [] for c in conditions}
    skip = bank.max_order - 1 if bank is not None else 0
    for sid in range(1, 20):
        series = generate_sprott(
            sid, n_steps=n_sections * section + 1, transient=_SIGNAL_TRANSIENT
        )
        x = series.data[:, 0]
        per_sys = {c: [] for c in conditions}
        for j in range(n_sections):
            seg = x[j * section: (j + 1) * section + 1]
            drive, stats = normalize_series(seg[:section], config.normalize_input)
            full = (seg - stats[0]) / stats[1]
            states = run(drive)
            if one_ahead:
                g = full[config.transient + 1: section + 1]
            else:
                g = full[config.transient: section]
            omega = assemble_state_matrix(states)
            model = train_ridge(omega, g, config.ridge_lambda)
            per_sys[0].append(model.coefficients[:-1])
            if bank is not None:
                lam = assemble_filter_matrix(states, bank).drop_startup()
                model_f = train_ridge(lam, g[skip:], config.ridge_lambda)
                per_sys[bank.size].append(model_f.coefficients[:-1])
        for c in conditions:
            coefs[c].append(per_sys[c])

    records: list[dict] = []
    reports: list[ClassificationReport] = []
    for c in conditions:
        train = np.array([
            np.mean(sys_coefs[: config.train_sections], axis=0)
            for sys_coefs in coefs[c]
        ])
        confusion = np.zeros((19, 19), dtype=int)
        resub = np.zeros((19, 19), dtype=int)
        for true_sys in range(19):
            for j, vec in enumerate(coefs[c][true_sys]):
                dist = np.linalg.norm(train - vec, axis=1)
                target = resub if j < config.train_sections else confusion
                target[true_sys, int(np.argmin(dist))] += 1
        p_e = 1.0 - confusion.trace() / confusion.sum()
        p_e_res = 1.0 - resub.trace() / resub.sum()
        reports.append(ClassificationReport(c, train, confusion, p_e, p_e_res))
        rec = _base_record(config, config.alpha, config.sigma, 0)
        rec.update(N_f=c, pe=p_e)
        records.append(rec)
    return ExperimentReport(
        config.task, tuple(records), tuple(_aggregate(records)),
        _snapshot(config), classification=tuple(reports),
    )


# --------------------------------------------------------------------------
# Memory capacity
# --------------------------------------------------------------------------

def run_memory(config: ExperimentConfig, bank: FilterBank | None = None) -> ExperimentReport:
    """Delayed-input reconstruction capacity, per trial seed and condition."""
    if config.task != "memory":
        raise ParameterError("config.task must be memory")
    bank = _resolve_bank(config, bank)
    records: list[dict] = []
    profiles: list[dict] = []
    for trial in range(config.trials):
        run = _reservoir_runner(config, (trial,), config.alpha, config.sigma)
        noise_seed = derive_seed(config.master_seed, "noise", trial)

        def plain(s):
            drive, _ = normalize_series(s, config.normalize_input)
            return run(drive)

        for n_f, runner in [(0, plain)] + (
            [(bank.size, lambda s: assemble_filter_matrix(plain(s), bank))]
            if bank is not None else []
        ):
            report = memory_capacity(
                runner, noise_seed, config.mc_samples, config.k_max,
                lam=config.ridge_lambda,
            )
            rec = _base_record(config, config.alpha, config.sigma, trial)
            rec.update(N_f=n_f, mc=report.total)
            records.append(rec)
            profiles.append({
                "N_f": n_f, "seed": trial,
                "per_delay": report.per_delay.tolist(),
            })
    return ExperimentReport(
        config.task, tuple(records), tuple(_aggregate(records)),
        _snapshot(config), memory_profiles=tuple(profiles),
    )


# --------------------------------------------------------------------------
# CSV emission (deterministic: fixed columns, %.17g floats, stable order)
# --------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def long_csv_text(records) -> str:
    """The long-form result table as CSV text (header + one row per record)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LONG_COLUMNS)
    for rec in records:
        writer.writerow([_fmt(rec.get(col)) for col in LONG_COLUMNS])
    return buf.getvalue()


def write_long_csv(records, path: str | Path) -> None:
    Path(path).write_text(long_csv_text(records))


def write_aggregates_csv(aggregates, path: str | Path) -> None:
    if not aggregates:
        Path(path).write_text("")
        return
    columns = list(aggregates[0])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for agg in aggregates:
        writer.writerow([_fmt(agg.get(col)) for col in columns])
    Path(path).write_text(buf.getvalue())


def write_confusion_csv(report: ClassificationReport, path: str | Path) -> None:
    """19 x 19 counts with system labels; rows are the true system."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("true",) + report.system_labels)
    for label, row in zip(report.system_labels, report.confusion):
        writer.writerow([label] + [str(int(v)) for v in row])
    Path(path).write_text(buf.getvalue())


def write_memory_profiles_csv(profiles, path: str | Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("N_f", "seed", "delay", "mc_k"))
    for prof in profiles:
        for k, val in enumerate(prof["per_delay"], start=1):
            writer.writerow([prof["N_f"], prof["seed"], k, _fmt(float(val))])
    Path(path).write_text(buf.getvalue())
