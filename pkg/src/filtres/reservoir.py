"""Reservoir architectures: a leaky-tanh random network and a laser delay-line map.

Both reservoirs are driven open loop by a scalar input and emit a
:class:`StateMatrix` whose rows are time steps and whose columns are node
signals.  Only the readout (see :mod:`filtres.readout`) is ever trained;
everything here is fixed once the seeds are chosen.
"""

from __future__ import annotations

import csv
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateMatrixError, DivergenceError, ParameterError


@dataclass(frozen=True)
class TanhReservoirSpec:
    """Leaky-tanh network: chi(n+1) = a*chi(n) + (1-a)*tanh(A chi(n) + w s(n) + 1)."""

    M: int
    alpha: float = 0.75
    spectral_radius: float = 0.48
    density: float = 0.5
    adjacency_seed: int = 0
    input_seed: int = 1

    def __post_init__(self):
        if self.M < 1:
            raise ParameterError("M must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError("alpha must lie in [0, 1]")
        if self.spectral_radius <= 0.0:
            raise ParameterError("spectral_radius must be > 0")
        if not 0.0 < self.density <= 1.0:
            raise ParameterError("density must lie in (0, 1]")


@dataclass(frozen=True)
class LaserReservoirSpec:
    """Time-multiplexed delay-line reservoir modeled as a sin^2 map.

    One physical nonlinearity produces M virtual nodes per input sample;
    the low-pass response H (a normalized truncated exponential with time
    constant ``tau_R / t_s`` map steps) couples nearby virtual nodes.
    """

    M: int
    beta: float = 0.5
    mu: float = 0.1
    phi: float = 0.0
    input_scale: float = 1.0
    t_s: float = 7.5e-8
    tau_R: float = 1.5e-6
    tau_s: int = 1
    impulse_len: int | None = None
    input_seed: int = 1

    def __post_init__(self):
        if self.M < 1:
            raise ParameterError("M must be >= 1")
        if self.t_s <= 0 or self.tau_R <= 0:
            raise ParameterError("t_s and tau_R must be > 0")
        if self.tau_s < 1:
            raise ParameterError("tau_s must be >= 1")
        if self.impulse_len is None:
            object.__setattr__(
                self, "impulse_len", int(math.ceil(10.0 * self.memory_steps))
            )
        if self.impulse_len < 1:
            raise ParameterError("impulse_len must be >= 1")

    @property
    def memory_steps(self) -> float:
        """Low-pass memory expressed in map steps."""
        return self.tau_R / self.t_s


@dataclass(frozen=True)
class Adjacency:
    """A random coupling matrix rescaled to a requested spectral radius."""

    matrix: np.ndarray
    spectral_radius: float


@dataclass(frozen=True)
class StateMatrix:
    """Node (or filtered-node) signals, one row per time step.

    ``labels`` records provenance per column; ``has_bias`` marks a trailing
    all-ones column; ``startup`` counts leading rows that belong to filter
    warm-up and should be excluded from fitting windows.
    """

    data: np.ndarray
    node_count: int
    labels: tuple[str, ...]
    has_bias: bool = False
    startup: int = 0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ParameterError("state data must be 2-D")
        if len(self.labels) != data.shape[1]:
            raise ParameterError(
                f"{len(self.labels)} labels for {data.shape[1]} columns"
            )
        if not np.isfinite(data).all():
            raise ParameterError("state matrix contains non-finite entries")
        if self.has_bias and not np.all(data[:, -1] == 1.0):
            raise ParameterError("bias column must be identically 1")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    def drop_startup(self) -> "StateMatrix":
        """Remove filter warm-up rows, returning a matrix safe to fit on."""
        if self.startup == 0:
            return self
        return StateMatrix(
            self.data[self.startup:], self.node_count, self.labels,
            self.has_bias, 0,
        )


def derive_seed(master: int, *path: int | str) -> int:
    """Derive a 64-bit child seed from a master seed and a role path.

    Hashing (master, role, indices...) rather than drawing seeds in sequence
    makes sweeps reproducible and independent of trial execution order.
    String path elements are folded in via CRC-32, so the derivation is
    stable across runs and platforms.
    """
    keys = [int(master) & 0xFFFFFFFFFFFFFFFF]
    for p in path:
        if isinstance(p, str):
            keys.append(zlib.crc32(p.encode("utf-8")))
        else:
            keys.append(int(p) & 0xFFFFFFFFFFFFFFFF)
    return int(np.random.SeedSequence(keys).generate_state(1, np.uint64)[0])


def build_adjacency(M: int, density: float, sigma: float, seed: int) -> Adjacency:
    """Draw a sparse random coupling matrix and rescale it to radius ``sigma``.

    Exactly round(density * M^2) entries, chosen without replacement, are
    set to U(-1, 1) draws; the diagonal is then zeroed and the whole matrix
    rescaled so its largest eigenvalue magnitude equals ``sigma``.
    """
    if M < 1:
        raise ParameterError("M must be >= 1")
    if not 0.0 < density <= 1.0:
        raise ParameterError("density must lie in (0, 1]")
    if sigma <= 0.0:
        raise ParameterError("sigma must be > 0")
    rng = np.random.default_rng(seed)
    n_entries = int(round(density * M * M))
    flat = np.zeros(M * M)
    chosen = rng.choice(M * M, size=n_entries, replace=False)
    flat[chosen] = rng.uniform(-1.0, 1.0, n_entries)
    A = flat.reshape(M, M)
    np.fill_diagonal(A, 0.0)
    raw_radius = float(np.max(np.abs(np.linalg.eigvals(A))))
    if raw_radius < 1e-12:
        raise DegenerateMatrixError(
            f"raw spectral radius {raw_radius:g} is too small to rescale"
        )
    A *= sigma / raw_radius
    realized = float(np.max(np.abs(np.linalg.eigvals(A))))
    return Adjacency(A, realized)


def build_input_weights(M: int, seed: int) -> np.ndarray:
    """Input coupling vector with entries uniform on (-1, 1)."""
    if M < 1:
        raise ParameterError("M must be >= 1")
    return np.random.default_rng(seed).uniform(-1.0, 1.0, M)


def normalize_series(
    x: np.ndarray,
    mode: str = "standardize",
    stats: tuple[float, float] | None = None,
) -> tuple[np.ndarray, tuple[float, float]]:
    """Rescale a drive signal to order one before it enters a reservoir.

    ``standardize`` maps to zero mean / unit variance, ``maxabs`` divides by
    the peak magnitude, ``raw`` is the identity.  Pass the ``stats`` of a
    training signal to apply the same affine map to a test signal.
    """
    x = np.asarray(x, dtype=float)
    if mode == "raw":
        return x, (0.0, 1.0)
    if stats is None:
        if mode == "standardize":
            stats = (float(np.mean(x)), float(np.std(x)))
        elif mode == "maxabs":
            stats = (0.0, float(np.max(np.abs(x))))
        else:
            raise ParameterError(f"unknown normalization mode {mode!r}")
        if stats[1] == 0.0:
            raise ParameterError("cannot normalize a constant signal")
    return (x - stats[0]) / stats[1], stats


def run_leaky_tanh(
    spec: TanhReservoirSpec,
    adjacency: Adjacency,
    input_weights: np.ndarray,
    drive: np.ndarray,
    transient: int = 0,
    initial_state: np.ndarray | None = None,
) -> StateMatrix:
    """Drive the leaky-tanh network and return the post-transient states.

    Row r of the result is the node vector after input sample
    ``drive[transient + r]`` has been absorbed, so a row and its target
    share a time index.  The bias column is *not* appended here.
    """
    drive = np.asarray(drive, dtype=float).ravel()
    if len(drive) <= transient:
        raise ParameterError("input length must exceed the transient")
    A = adjacency.matrix
    w = np.asarray(input_weights, dtype=float)
    if A.shape != (spec.M, spec.M) or w.shape != (spec.M,):
        raise ParameterError("adjacency/input dimensions do not match spec.M")
    alpha = spec.alpha
    gain = 1.0 - alpha
    chi = np.zeros(spec.M) if initial_state is None else np.array(
        initial_state, dtype=float
    )
    states = np.empty((len(drive), spec.M))
    for n in range(len(drive)):
        chi = alpha * chi + gain * np.tanh(A @ chi + w * drive[n] + 1.0)
        states[n] = chi
    if not np.isfinite(states).all():
        bad = int(np.flatnonzero(~np.isfinite(states).all(axis=1))[0])
        raise DivergenceError(f"reservoir state diverged at step {bad}", step=bad)
    labels = tuple(f"node_{i}" for i in range(1, spec.M + 1))
    return StateMatrix(states[transient:], spec.M, labels)


def laser_impulse_response(spec: LaserReservoirSpec) -> np.ndarray:
    """Normalized first-order low-pass impulse response, truncated.

    H(j) = c * exp(-j / (tau_R / t_s)) for j = 1..impulse_len, with c fixed
    so the taps sum to one.
    """
    j = np.arange(1, spec.impulse_len + 1, dtype=float)
    h = np.exp(-j / spec.memory_steps)
    return h / h.sum()


def run_laser(
    spec: LaserReservoirSpec,
    input_weights: np.ndarray,
    drive: np.ndarray,
    transient_updates: int = 0,
) -> StateMatrix:
    """Run the delay-line map and reshape it into virtual-node columns.

    The scalar map x(n + tau_s) = sum_j beta H(j) sin^2(mu x(n-j) + d(n) + phi)
    advances M steps per input sample; the drive term d(n) presents input
    sample floor(n / M) through mask element W[n mod M].  Map sample k
    (0-based) lands at row k // M, column k % M, so each row of the result
    corresponds to one input sample and each column to one virtual node.
    ``transient_updates`` leading rows are discarded.
    """
    drive = np.asarray(drive, dtype=float).ravel()
    if len(drive) <= transient_updates:
        raise ParameterError("input length must exceed transient_updates")
    w = np.asarray(input_weights, dtype=float)
    if w.shape != (spec.M,):
        raise ParameterError("input weight length must equal spec.M")
    M, J, tau = spec.M, spec.impulse_len, spec.tau_s
    h_rev = (spec.beta * laser_impulse_response(spec))[::-1].copy()
    u = spec.input_scale * drive
    total = len(drive) * M
    offset = J + tau
    xs = np.zeros(offset + total + 1)
    mu, phi = spec.mu, spec.phi
    for m in range(1, total + 1):
        n = m - tau
        d = w[n % M] * u[n // M] if n >= 0 else 0.0
        window = xs[offset + m - tau - J: offset + m - tau]
        xs[offset + m] = h_rev @ np.sin(mu * window + (d + phi)) ** 2
    samples = xs[offset + 1: offset + total + 1]
    if not np.isfinite(samples).all():
        bad = int(np.flatnonzero(~np.isfinite(samples))[0])
        raise DivergenceError(f"laser map diverged at map step {bad}", step=bad)
    states = samples.reshape(len(drive), M)
    labels = tuple(f"node_{i}" for i in range(1, M + 1))
    return StateMatrix(states[transient_updates:], M, labels)


# --------------------------------------------------------------------------
# CSV import/export
# --------------------------------------------------------------------------

def write_state_matrix_csv(states: StateMatrix, path: str | Path) -> None:
    """One row per time step, columns labeled by provenance; exact round-trip."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(states.labels)
        for row in states.data:
            writer.writerow([f"{v:.17g}" for v in row])


def read_state_matrix_csv(path: str | Path) -> StateMatrix:
    """Read a matrix written by :func:`write_state_matrix_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        labels = tuple(next(reader))
        rows = [[float(v) for v in row] for row in reader]
    if not rows:
        raise ParameterError(f"{path}: empty state matrix")
    has_bias = labels[-1] == "bias"
    node_labels = [lab for lab in labels if lab.startswith("node_")]
    node_count = len({lab.split("_f")[0] for lab in node_labels}) or len(labels) - has_bias
    return StateMatrix(np.asarray(rows), node_count, labels, has_bias)
