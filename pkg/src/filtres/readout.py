"""Linear readout training and the diagnostics that explain its quality.

The readout is the only trained part of a reservoir computer: a ridge
regression from the (optionally filtered) state matrix onto a target
signal.  Alongside the fit live the quantities used to compare reservoir
configurations: the normalized train/test error, the numerical rank of the
state covariance, an orthonormal-basis demonstration of why adding a
function of a signal raises that rank, and the delayed-input memory
capacity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import ParameterError, ZeroVarianceError
from .reservoir import StateMatrix
from .signals import uniform_noise


def _as_matrix(X) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(X, StateMatrix):
        return X.data, X.labels
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise ParameterError("expected a nonempty 2-D matrix")
    return arr, tuple(f"col_{i}" for i in range(1, arr.shape[1] + 1))


@dataclass(frozen=True)
class ReadoutModel:
    """A fitted coefficient vector plus the metadata needed to reuse it."""

    coefficients: np.ndarray
    ridge_lambda: float
    training_error: float
    source: str  # "reservoir_only" or "filtered"
    labels: tuple[str, ...]
    rank_deficient: bool = False

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float).ravel()
        if len(self.labels) != coef.size:
            raise ParameterError("one coefficient per column label required")
        if self.ridge_lambda < 0 or self.training_error < 0:
            raise ParameterError("ridge_lambda and training_error must be >= 0")
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "labels", tuple(self.labels))


@dataclass(frozen=True)
class RankReport:
    """Numerical rank of a state matrix with the evidence behind it."""

    rank: int
    singular_values: np.ndarray
    tolerance_used: float


@dataclass(frozen=True)
class MemoryReport:
    """Per-delay reconstruction capacities and their sum.

    ``literal_per_delay`` carries the raw product-of-sums variant of the
    per-delay statistic when it was requested, for side-by-side comparison
    with the standard squared-correlation definition.
    """

    per_delay: np.ndarray
    total: float
    literal_per_delay: np.ndarray | None = None


@dataclass(frozen=True)
class GramSchmidtBasis:
    u1: np.ndarray
    u2: np.ndarray | None
    rank: int


def default_ridge_lambda(X) -> float:
    """Relative regularization: 1e-6 * trace(X^T X) / columns."""
    data, _ = _as_matrix(X)
    return 1e-6 * float(np.sum(data * data)) / data.shape[1]


def assemble_state_matrix(states: StateMatrix) -> StateMatrix:
    """Append the all-ones bias column to a raw node matrix."""
    if states.has_bias:
        raise ParameterError("state matrix already has a bias column")
    data = np.hstack([states.data, np.ones((states.n_rows, 1))])
    return StateMatrix(
        data, states.node_count, states.labels + ("bias",),
        has_bias=True, startup=states.startup,
    )


def _solve_ridge(X: np.ndarray, g: np.ndarray, lam: float):
    """Minimize |XC - g|^2 + lam |C|^2 via an SVD least-squares solve."""
    n, k = X.shape
    if lam > 0.0:
        X = np.vstack([X, math.sqrt(lam) * np.eye(k)])
        g = np.concatenate([g, np.zeros(k)])
    coef, _, rank, _ = scipy.linalg.lstsq(X, g, lapack_driver="gelsd")
    return coef, int(rank)


def train_ridge(X, g: np.ndarray, lam: float | None = None) -> ReadoutModel:
    """Fit readout coefficients by ridge regression.

    ``lam=None`` selects the relative default; ``lam=0`` falls back to the
    minimum-norm least-squares solution and flags any rank deficiency
    instead of failing.
    """
    data, labels = _as_matrix(X)
    g = np.asarray(g, dtype=float).ravel()
    if data.shape[0] != g.size:
        raise ParameterError(
            f"{data.shape[0]} state rows vs {g.size} target samples"
        )
    if lam is None:
        lam = default_ridge_lambda(data)
    if lam < 0:
        raise ParameterError("ridge lambda must be >= 0")
    coef, solve_rank = _solve_ridge(data, g, lam)
    deficient = lam == 0.0 and solve_rank < data.shape[1]
    source = "filtered" if any("_f" in lab for lab in labels) else "reservoir_only"
    err = _normalized_error(data @ coef, g)
    return ReadoutModel(coef, float(lam), err, source, labels, deficient)


def _normalized_error(prediction: np.ndarray, target: np.ndarray) -> float:
    scale = float(np.std(target))
    if scale == 0.0:
        raise ZeroVarianceError("target has zero variance; error is undefined")
    return float(np.std(prediction - target) / scale)


def evaluate_error(X, model: ReadoutModel, g: np.ndarray) -> float:
    """std(XC - g) / std(g): the scale-free fit error on any data window."""
    data, _ = _as_matrix(X)
    g = np.asarray(g, dtype=float).ravel()
    if data.shape[1] != model.coefficients.size:
        raise ParameterError("column count does not match the fitted model")
    if data.shape[0] != g.size:
        raise ParameterError("row count does not match the target length")
    return _normalized_error(data @ model.coefficients, g)


def covariance_rank(X) -> RankReport:
    """Count the linearly independent columns of a state matrix.

    Works on the singular values of X itself rather than of X^T X (which
    would square the condition number), with the conventional tolerance
    max(rows, cols) * eps * sigma_max.  The count equals the rank of the
    covariance matrix.
    """
    data, _ = _as_matrix(X)
    svals = np.linalg.svd(data, compute_uv=False)
    tol = max(data.shape) * np.finfo(data.dtype).eps * float(svals[0])
    return RankReport(int(np.sum(svals > tol)), svals, tol)


def gram_schmidt_basis(
    x: np.ndarray, fx: np.ndarray, tol: float = 1e-10
) -> GramSchmidtBasis:
    """Orthonormalize a signal and a function of it.

    Returns rank 2 with unit vectors u1 (along x) and u2 (the normalized
    residual of fx) unless fx is numerically collinear with x, in which
    case rank is 1 and u2 is None.
    """
    x = np.asarray(x, dtype=float).ravel()
    fx = np.asarray(fx, dtype=float).ravel()
    if x.size != fx.size:
        raise ParameterError("x and f(x) must have the same length")
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        raise ParameterError("x has zero norm")
    u1 = x / nx
    nfx = float(np.linalg.norm(fx))
    if nfx == 0.0:
        return GramSchmidtBasis(u1, None, 1)
    residual = fx - (u1 @ fx) * u1
    if float(np.linalg.norm(residual)) < tol * nfx:
        return GramSchmidtBasis(u1, None, 1)
    y = fx / nfx
    z = y - (u1 @ y) * u1
    return GramSchmidtBasis(u1, z / float(np.linalg.norm(z)), 2)


def memory_capacity(
    runner: Callable[[np.ndarray], StateMatrix],
    seed: int,
    n_samples: int,
    k_max: int,
    lam: float | None = None,
    train_fraction: float = 0.8,
    literal_formula: bool = False,
) -> MemoryReport:
    """How well delayed copies of a noise drive can be read back out.

    ``runner`` maps a drive signal to a StateMatrix whose rows align with
    the trailing samples of the drive (reservoir runners with a transient
    discard satisfy this).  For each delay k the readout is fit to s(n-k)
    on the leading ``train_fraction`` of rows; the capacity at delay k is
    the squared Pearson correlation between target and prediction on the
    held-out remainder, and the total is the sum over k = 1..k_max.
    """
    if k_max < 1:
        raise ParameterError("k_max must be >= 1")
    if not 0.0 < train_fraction < 1.0:
        raise ParameterError("train_fraction must lie in (0, 1)")
    s = uniform_noise(seed, n_samples).data[:, 0]
    states = runner(s).drop_startup()
    offset = n_samples - states.n_rows
    if offset < 0:
        raise ParameterError("runner returned more rows than drive samples")
    omega = states if states.has_bias else assemble_state_matrix(states)
    per_delay = np.zeros(k_max)
    literal = np.zeros(k_max) if literal_formula else None
    for k in range(1, k_max + 1):
        first = max(0, k - offset)
        rows = omega.data[first:]
        target = s[offset + first - k: offset + states.n_rows - k]
        split = int(train_fraction * len(target))
        if split < omega.data.shape[1] or split >= len(target):
            raise ParameterError("n_samples too small for this k_max")
        lam_k = lam if lam is not None else default_ridge_lambda(rows[:split])
        coef, _ = _solve_ridge(rows[:split], target[:split], lam_k)
        prediction = rows[split:] @ coef
        held_out = target[split:]
        dp = prediction - prediction.mean()
        dy = held_out - held_out.mean()
        denom = float(dp @ dp) * float(dy @ dy)
        if denom > 0.0:
            per_delay[k - 1] = min(1.0, float(dp @ dy) ** 2 / denom)
        if literal is not None:
            lit_denom = float(np.sum(dy)) * float(np.sum(dp))
            literal[k - 1] = (
                float(dy @ dp) / lit_denom if lit_denom != 0.0 else np.inf
            )
    return MemoryReport(per_delay, float(per_delay.sum()), literal)


# --------------------------------------------------------------------------
# Model serialization (JSON text; floats round-trip exactly)
# --------------------------------------------------------------------------

def save_model(model: ReadoutModel, path: str | Path) -> None:
    payload = {
        "labels": list(model.labels),
        "coefficients": [float(c) for c in model.coefficients],
        "ridge_lambda": model.ridge_lambda,
        "training_error": model.training_error,
        "source": model.source,
        "rank_deficient": model.rank_deficient,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)


def load_model(path: str | Path) -> ReadoutModel:
    with open(path) as fh:
        payload = json.load(fh)
    return ReadoutModel(
        np.array(payload["coefficients"], dtype=float),
        payload["ridge_lambda"],
        payload["training_error"],
        payload["source"],
        tuple(payload["labels"]),
        payload["rank_deficient"],
    )
