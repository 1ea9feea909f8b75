"""FIR filter banks applied to reservoir node outputs.

A bank holds one FIR tap vector per filter order.  Applying the bank to an
N x M state matrix multiplies the column count by the bank size, which
raises the covariance rank of the readout basis without touching the
reservoir itself.  The built-in bank uses low-order Bessel filter
coefficients; custom banks can be loaded from a text file.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .errors import InsufficientDataError, ParameterError
from .reservoir import StateMatrix

# Bessel FIR taps for orders 1..5; tap k multiplies the sample k-1 steps back,
# so the order-1 filter is the exact identity.
_BESSEL_TAPS = (
    (1.0,),
    (1.7321, 1.0),
    (2.4329, 2.4662, 1.0),
    (3.1239, 4.3916, 3.2011, 1.0),
    (3.8107, 6.7767, 6.8864, 3.9363, 1.0),
)


@dataclass(frozen=True)
class FilterBank:
    """An ordered set of FIR tap vectors, one per filter."""

    filters: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.filters:
            raise ParameterError("a filter bank needs at least one filter")
        taps = tuple(np.asarray(f, dtype=float).ravel() for f in self.filters)
        for f in taps:
            if f.size == 0:
                raise ParameterError("empty coefficient vector in bank")
            if not np.isfinite(f).all():
                raise ParameterError("non-finite filter coefficient")
        object.__setattr__(self, "filters", taps)

    @property
    def size(self) -> int:
        return len(self.filters)

    @property
    def max_order(self) -> int:
        return max(len(f) for f in self.filters)


def bessel_bank(n_f: int) -> FilterBank:
    """The built-in Bessel bank with filters of order 1..n_f (n_f in 1..5)."""
    if not 1 <= n_f <= 5:
        raise ParameterError(f"n_f must be in 1..5, got {n_f}")
    return FilterBank(tuple(np.array(t) for t in _BESSEL_TAPS[:n_f]))


def apply_filter(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """FIR-filter a series: y(t) = sum_k a_k x(t - k + 1), zero history.

    Tap 1 weighs the current sample, so the output has the input's length;
    the first order-1 samples ramp up from zero-padded history.
    """
    a = np.asarray(coeffs, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ParameterError("cannot filter an empty series")
    if a.size == 0:
        raise ParameterError("empty coefficient vector")
    if x.size < a.size:
        raise ParameterError("series shorter than the filter order")
    return lfilter(a, [1.0], x)


def assemble_filter_matrix(states: StateMatrix, bank: FilterBank) -> StateMatrix:
    """Apply every filter to every node column and append the bias column.

    Columns are ordered (node 1: filters 1..N_f), (node 2: ...), ..., bias;
    labels carry the (node, filter-order) provenance.  The first
    max_order - 1 rows are marked as startup so fitting windows can skip
    the zero-padded warm-up.
    """
    if states.has_bias:
        raise ParameterError("filter input must not already carry a bias column")
    n_rows, m = states.data.shape
    if n_rows < bank.max_order:
        raise InsufficientDataError(
            f"{n_rows} rows cannot warm up an order-{bank.max_order} filter"
        )
    filtered = [lfilter(f, [1.0], states.data, axis=0) for f in bank.filters]
    stacked = np.stack(filtered, axis=2)  # rows x nodes x filters
    out = np.empty((n_rows, m * bank.size + 1))
    out[:, :-1] = stacked.reshape(n_rows, m * bank.size)
    out[:, -1] = 1.0
    labels = tuple(
        f"{node}_f{len(bank.filters[e])}"
        for node in states.labels
        for e in range(bank.size)
    ) + ("bias",)
    return StateMatrix(
        out, states.node_count, labels, has_bias=True,
        startup=states.startup + bank.max_order - 1,
    )


@dataclass(frozen=True)
class UpdateTimeModel:
    """Hardware timing for a filtered reservoir of M_f nodes.

    A filter of order eta adds an eta/2 startup delay, so one full update
    takes M_f * t_s * (1 + eta/2); ``speedup_vs(M)`` is the ratio of an
    unfiltered M-node update time to this one.
    """

    update_time: float
    m_f: int
    t_s: float
    eta_max: int

    def speedup_vs(self, m_reference: int) -> float:
        return m_reference * self.t_s / self.update_time


def update_time_model(m_f: int, t_s: float, eta_max: int) -> UpdateTimeModel:
    """Update-time and speedup model for a reservoir followed by filters."""
    if m_f < 1:
        raise ParameterError("m_f must be >= 1")
    if eta_max < 0:
        raise ParameterError("eta_max must be >= 0")
    return UpdateTimeModel(m_f * t_s * (1.0 + eta_max / 2.0), m_f, t_s, eta_max)


# --------------------------------------------------------------------------
# Bank serialization (text; supports custom user banks)
# --------------------------------------------------------------------------

def save_bank(bank: FilterBank, path: str | Path) -> None:
    """Write one ``filter <k>: a1 a2 ...`` line per filter."""
    with open(path, "w") as fh:
        fh.write("# FIR filter bank\n")
        for k, taps in enumerate(bank.filters, start=1):
            fh.write(f"filter {k}: " + " ".join(repr(float(a)) for a in taps) + "\n")


def load_bank(path: str | Path) -> FilterBank:
    """Read a bank written by :func:`save_bank` (or hand-authored)."""
    filters = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise ParameterError(f"{path}: malformed bank line {line!r}")
            _, _, tail = line.partition(":")
            filters.append(np.array([float(v) for v in tail.split()]))
    if not filters:
        raise ParameterError(f"{path}: no filters found")
    return FilterBank(tuple(filters))
