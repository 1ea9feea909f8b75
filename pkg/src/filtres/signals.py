"""Deterministic generation of driving and target time series.

Three sources cover every experiment in the package: the Lorenz system
(fitting and prediction tasks), the 19 chaotic flows of the Sprott catalog
(classification corpus), and uniform white noise (memory-capacity probes).
All generators are pure functions of their arguments; integration is
classical fixed-step 4th-order Runge-Kutta, so trajectories are
bit-reproducible and their convergence order is testable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DivergenceError, ParameterError

_DIVERGENCE_LIMIT = 1e8


@dataclass(frozen=True)
class MultivariateSeries:
    """A fixed-rate record of one or more signal components.

    ``data`` is laid out (n_samples, n_components); ``names`` labels the
    columns; ``dt`` is the sample interval in model time units.
    """

    names: tuple[str, ...]
    data: np.ndarray
    dt: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1:
            raise ParameterError("series data must be a nonempty 2-D array")
        if len(self.names) != data.shape[1]:
            raise ParameterError(
                f"{len(self.names)} names for {data.shape[1]} components"
            )
        if self.dt <= 0:
            raise ParameterError("dt must be positive")
        if not np.isfinite(data).all():
            raise ParameterError("series contains non-finite samples")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    def component(self, name: str) -> np.ndarray:
        """Return one labeled column as a 1-D array."""
        try:
            return self.data[:, self.names.index(name)]
        except ValueError:
            raise ParameterError(f"no component named {name!r}") from None


@dataclass(frozen=True)
class LorenzParams:
    """Parameters of the Lorenz flow dx=c1(y-x), dy=x(c2-z)-y, dz=xy-c3*z."""

    c1: float = 10.0
    c2: float = 28.0
    c3: float = 8.0 / 3.0
    dt: float = 0.02
    x0: tuple[float, float, float] = (1.0, 1.0, 20.0)

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError("dt must be positive")


def _rk4_path(rhs, x0, h: float, n_samples: int, substeps: int) -> np.ndarray:
    """March a 3-D flow with fixed-step RK4, one sample every ``substeps`` steps.

    Sample 0 is the initial condition.  Raises DivergenceError naming the
    sample index if the state leaves [-1e8, 1e8] or becomes non-finite.
    """
    x, y, z = (float(v) for v in x0)
    out = np.empty((n_samples, 3))
    out[0] = (x, y, z)
    for i in range(1, n_samples):
        for _ in range(substeps):
            k1x, k1y, k1z = rhs(x, y, z)
            k2x, k2y, k2z = rhs(x + 0.5 * h * k1x, y + 0.5 * h * k1y, z + 0.5 * h * k1z)
            k3x, k3y, k3z = rhs(x + 0.5 * h * k2x, y + 0.5 * h * k2y, z + 0.5 * h * k2z)
            k4x, k4y, k4z = rhs(x + h * k3x, y + h * k3y, z + h * k3z)
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        bad = not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z))
        if bad or max(abs(x), abs(y), abs(z)) > _DIVERGENCE_LIMIT:
            raise DivergenceError(f"trajectory diverged at sample {i}", step=i)
        out[i] = (x, y, z)
    return out


def integrate_lorenz(
    params: LorenzParams, n_steps: int, transient: int = 0
) -> MultivariateSeries:
    """Integrate the Lorenz system and return x, y, z after a transient.

    The step size equals the sample interval ``params.dt``; ``transient``
    leading samples are discarded so the returned block sits on the
    attractor regardless of the initial condition.
    """
    if n_steps < 1:
        raise ParameterError("n_steps must be >= 1")
    if transient < 0:
        raise ParameterError("transient must be >= 0")
    c1, c2, c3 = params.c1, params.c2, params.c3

    def rhs(x, y, z):
        return c1 * (y - x), x * (c2 - z) - y, x * y - c3 * z

    path = _rk4_path(rhs, params.x0, params.dt, transient + n_steps, substeps=1)
    return MultivariateSeries(("x", "y", "z"), path[transient:], params.dt)


# --------------------------------------------------------------------------
# Sprott catalog
# --------------------------------------------------------------------------
#
# Each of the 19 flows is stored as data: one tuple of monomial terms
# (coefficient, x-power, y-power, z-power) per state component, so tests can
# cross-check the compiled right-hand sides against the table term by term.
# Initial conditions are package defaults validated by long boundedness
# scans (1e5 samples at dt=0.5): system 1 is the conservative-type flow that
# needs a start inside its chaotic sea; the rest run from a small generic
# offset.

Terms = tuple[tuple[float, int, int, int], ...]


@dataclass(frozen=True)
class SprottSystem:
    label: str
    terms: tuple[Terms, Terms, Terms]
    x0: tuple[float, float, float]


_NEAR_ORIGIN = (0.05, 0.05, 0.05)

SPROTT_SYSTEMS: dict[int, SprottSystem] = {
    1: SprottSystem("A", (
        ((1.0, 0, 1, 0),),
        ((-1.0, 1, 0, 0), (1.0, 0, 1, 1)),
        ((1.0, 0, 0, 0), (-1.0, 0, 2, 0)),
    ), (0.0, 5.0, 0.0)),
    2: SprottSystem("B", (
        ((1.0, 0, 1, 1),),
        ((1.0, 1, 0, 0), (-1.0, 0, 1, 0)),
        ((1.0, 0, 0, 0), (-1.0, 1, 1, 0)),
    ), _NEAR_ORIGIN),
    3: SprottSystem("C", (
        ((1.0, 0, 1, 1),),
        ((1.0, 1, 0, 0), (-1.0, 0, 1, 0)),
        ((1.0, 0, 0, 0), (-1.0, 2, 0, 0)),
    ), _NEAR_ORIGIN),
    4: SprottSystem("D", (
        ((-1.0, 0, 1, 0),),
        ((1.0, 1, 0, 0), (1.0, 0, 0, 1)),
        ((1.0, 1, 0, 1), (3.0, 0, 2, 0)),
    ), _NEAR_ORIGIN),
    5: SprottSystem("E", (
        ((1.0, 0, 1, 1),),
        ((1.0, 2, 0, 0), (-1.0, 0, 1, 0)),
        ((1.0, 0, 0, 0), (-4.0, 1, 0, 0)),
    ), _NEAR_ORIGIN),
    6: SprottSystem("F", (
        ((1.0, 0, 1, 0), (1.0, 0, 0, 1)),
        ((-1.0, 1, 0, 0), (0.5, 0, 1, 0)),
        ((1.0, 2, 0, 0), (-1.0, 0, 0, 1)),
    ), _NEAR_ORIGIN),
    7: SprottSystem("G", (
        ((0.4, 1, 0, 0), (1.0, 0, 0, 1)),
        ((1.0, 1, 0, 1), (-1.0, 0, 1, 0)),
        ((-1.0, 1, 0, 0), (1.0, 0, 1, 0)),
    ), _NEAR_ORIGIN),
    8: SprottSystem("H", (
        ((-1.0, 0, 1, 0), (1.0, 0, 0, 2)),
        ((1.0, 1, 0, 0), (0.5, 0, 1, 0)),
        ((1.0, 1, 0, 0), (-1.0, 0, 0, 1)),
    ), _NEAR_ORIGIN),
    9: SprottSystem("I", (
        ((-0.2, 0, 1, 0),),
        ((1.0, 1, 0, 0), (1.0, 0, 0, 1)),
        ((1.0, 1, 0, 0), (1.0, 0, 2, 0), (-1.0, 0, 0, 1)),
    ), _NEAR_ORIGIN),
    10: SprottSystem("J", (
        ((2.0, 0, 0, 1),),
        ((-2.0, 0, 1, 0), (1.0, 0, 0, 1)),
        ((-1.0, 1, 0, 0), (1.0, 0, 1, 0), (1.0, 0, 2, 0)),
    ), _NEAR_ORIGIN),
    11: SprottSystem("K", (
        ((1.0, 1, 1, 0), (-1.0, 0, 0, 1)),
        ((1.0, 1, 0, 0), (-1.0, 0, 1, 0)),
        ((1.0, 1, 0, 0), (0.3, 0, 0, 1)),
    ), _NEAR_ORIGIN),
    12: SprottSystem("L", (
        ((1.0, 0, 1, 0), (3.9, 0, 0, 1)),
        ((0.9, 2, 0, 0), (-1.0, 0, 1, 0)),
        ((1.0, 0, 0, 0), (-1.0, 1, 0, 0)),
    ), _NEAR_ORIGIN),
    13: SprottSystem("M", (
        ((-1.0, 0, 0, 1),),
        ((-1.0, 2, 0, 0), (-1.0, 0, 1, 0)),
        ((1.7, 0, 0, 0), (1.7, 1, 0, 0), (1.0, 0, 1, 0)),
    ), _NEAR_ORIGIN),
    14: SprottSystem("N", (
        ((-2.0, 0, 1, 0),),
        ((1.0, 1, 0, 0), (1.0, 0, 0, 2)),
        ((1.0, 0, 0, 0), (1.0, 0, 1, 0), (-2.0, 0, 0, 1)),
    ), _NEAR_ORIGIN),
    15: SprottSystem("O", (
        ((1.0, 0, 1, 0),),
        ((1.0, 1, 0, 0), (-1.0, 0, 0, 1)),
        ((1.0, 1, 0, 0), (1.0, 1, 0, 1), (2.7, 0, 1, 0)),
    ), _NEAR_ORIGIN),
    16: SprottSystem("P", (
        ((2.7, 0, 1, 0), (1.0, 0, 0, 1)),
        ((-1.0, 1, 0, 0), (1.0, 0, 2, 0)),
        ((1.0, 1, 0, 0), (1.0, 0, 1, 0)),
    ), _NEAR_ORIGIN),
    17: SprottSystem("Q", (
        ((-1.0, 0, 0, 1),),
        ((1.0, 1, 0, 0), (-1.0, 0, 1, 0)),
        ((3.1, 1, 0, 0), (1.0, 0, 2, 0), (0.5, 0, 0, 1)),
    ), _NEAR_ORIGIN),
    18: SprottSystem("R", (
        ((0.9, 0, 0, 0), (-1.0, 0, 1, 0)),
        ((0.4, 0, 0, 0), (1.0, 0, 0, 1)),
        ((1.0, 1, 1, 0), (-1.0, 0, 0, 1)),
    ), _NEAR_ORIGIN),
    19: SprottSystem("S", (
        ((-1.0, 1, 0, 0), (-4.0, 0, 1, 0)),
        ((1.0, 1, 0, 0), (1.0, 0, 0, 2)),
        ((1.0, 0, 0, 0), (1.0, 1, 0, 0)),
    ), _NEAR_ORIGIN),
}


def _term_source(coef: float, px: int, py: int, pz: int) -> str:
    factors = ["x"] * px + ["y"] * py + ["z"] * pz
    return "*".join([repr(coef)] + factors) if factors else repr(coef)


def sprott_rhs(system_id: int):
    """Compile the catalog entry for ``system_id`` into a fast (x,y,z) callable."""
    system = SPROTT_SYSTEMS.get(system_id)
    if system is None:
        raise ParameterError(f"system_id must be in 1..19, got {system_id}")
    exprs = [
        " + ".join(_term_source(*term) for term in comp) for comp in system.terms
    ]
    namespace: dict = {}
    exec(f"def _rhs(x, y, z):\n    return ({exprs[0]}, {exprs[1]}, {exprs[2]})",
         namespace)
    return namespace["_rhs"]


def generate_sprott(
    system_id: int,
    dt: float = 0.5,
    n_steps: int = 1,
    transient: int = 0,
    x0: tuple[float, float, float] | None = None,
    substeps: int = 10,
) -> MultivariateSeries:
    """Generate the x component of one Sprott flow, sampled every ``dt``.

    Several catalog members are unstable under single-step RK4 at the 0.5
    sampling interval, so each sample is advanced with ``substeps`` internal
    RK4 steps of dt/substeps.  ``x0`` defaults to the system's documented
    safe initial condition.
    """
    rhs = sprott_rhs(system_id)
    if n_steps < 1:
        raise ParameterError("n_steps must be >= 1")
    if transient < 0:
        raise ParameterError("transient must be >= 0")
    if substeps < 1:
        raise ParameterError("substeps must be >= 1")
    start = SPROTT_SYSTEMS[system_id].x0 if x0 is None else tuple(x0)
    path = _rk4_path(rhs, start, dt / substeps, transient + n_steps, substeps)
    return MultivariateSeries(("x",), path[transient:, :1], dt)


def uniform_noise(seed: int, n: int) -> MultivariateSeries:
    """I.i.d. samples uniform on [-1, 1] from numpy's PCG64 generator."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return MultivariateSeries(("s",), rng.uniform(-1.0, 1.0, n)[:, None], 1.0)


# --------------------------------------------------------------------------
# CSV import/export (full double precision, 17 significant digits)
# --------------------------------------------------------------------------

def write_series_csv(series: MultivariateSeries, path: str | Path) -> None:
    """Write ``t,<name1>,<name2>,...`` rows; floats round-trip exactly."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t",) + series.names)
        for i, row in enumerate(series.data):
            writer.writerow([f"{i * series.dt:.17g}"] + [f"{v:.17g}" for v in row])


def read_series_csv(path: str | Path) -> MultivariateSeries:
    """Read a series written by :func:`write_series_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    if not rows or header[0] != "t":
        raise ParameterError(f"{path}: not a series CSV")
    data = np.asarray(rows)
    dt = data[1, 0] - data[0, 0] if len(rows) > 1 else 1.0
    return MultivariateSeries(tuple(header[1:]), data[:, 1:], dt)
