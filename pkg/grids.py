"""Grids on (0, 1], densities, reference measures and potentials.

All containers hold read-only float64 numpy arrays and validate their
invariants on construction; nothing is clipped silently.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from errors import DomainError

logger = logging.getLogger(__name__)

# Tolerance on |sum - 1| for densities and reference measures
SIMPLEX_TOL = 1e-12

VectorLike = Union["Density", "ReferenceMeasure", "Potential", np.ndarray, list, tuple]


def as_vector(values: VectorLike) -> np.ndarray:
    """Return the float64 array behind a container or array-like"""
    return np.asarray(getattr(values, "values", values), dtype=float)


def _frozen(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be a one-dimensional vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_simplex(arr: np.ndarray, name: str):
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    if not np.all(arr > 0):
        bad = int(np.argmin(arr))
        raise DomainError(f"{name} must be strictly positive (entry {bad} is {arr[bad]!r})")
    total = float(arr.sum())
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise DomainError(f"{name} must sum to 1, got {total!r}")


@dataclass(frozen=True)
class Grid:
    """Grid points x_i on (0, 1]"""
    points: np.ndarray
    periodic: bool = False

    def __post_init__(self):
        points = _frozen(self.points, "grid points")
        if points.size < 2:
            raise DomainError(f"a grid needs at least 2 points, got {points.size}")
        if not np.all(np.diff(points) > 0):
            raise DomainError("grid points must be strictly increasing")
        if points[0] <= 0 or points[-1] > 1:
            raise DomainError("grid points must lie in (0, 1]")
        object.__setattr__(self, "points", points)

    @property
    def n(self) -> int:
        return int(self.points.size)


@dataclass(frozen=True)
class Density:
    """Strictly positive probability vector p"""
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values, "density")
        _check_simplex(values, "density")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_weights(cls, weights) -> "Density":
        """Normalize a strictly positive weight vector"""
        w = np.asarray(weights, dtype=float)
        if not np.all(np.isfinite(w)) or not np.all(w > 0):
            raise DomainError("density weights must be finite and strictly positive")
        return cls(w / w.sum())

    @property
    def n(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class ReferenceMeasure:
    """Reference density mu"""
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values, "reference measure")
        _check_simplex(values, "reference measure")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class Potential:
    """External potential V"""
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values, "potential")
        if not np.all(np.isfinite(values)):
            raise DomainError("potential has non-finite entries")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.size)


def make_uniform_grid(n: int, periodic: bool = False) -> Grid:
    """Grid with x_i = i/n for i = 1..n"""
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    return Grid(np.arange(1, n + 1, dtype=float) / n, periodic=periodic)


def make_power_measure(grid: Grid, exponent: float) -> ReferenceMeasure:
    """Reference measure mu_i proportional to x_i**exponent"""
    if exponent < 0:
        raise DomainError(f"power-measure exponent must be nonnegative, got {exponent}")
    # Rescale first so large exponents do not underflow before normalization
    weights = (grid.points / grid.points.max()) ** exponent
    total = weights.sum()
    return ReferenceMeasure(weights / total)


def uniform_measure(grid: Grid) -> ReferenceMeasure:
    """Uniform reference measure mu_i = 1/n"""
    return ReferenceMeasure(np.full(grid.n, 1.0 / grid.n))


def make_sine_potential(grid: Grid, frequency: float, amplitude: float) -> Potential:
    """V_i = amplitude * sin(frequency * pi * x_i)"""
    return Potential(amplitude * np.sin(frequency * np.pi * grid.points))


def zero_potential(grid: Grid) -> Potential:
    """Potential V = 0"""
    return Potential(np.zeros(grid.n))


def random_density(n: int, seed: int) -> Density:
    """I.i.d. uniform weights from a seeded generator, normalized to sum 1"""
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    rng = np.random.default_rng(seed)
    # 1 - U[0, 1) is uniform on (0, 1], so no weight is exactly zero
    weights = 1.0 - rng.random(n)
    return Density(weights / weights.sum())


def format_columns(grid: Grid, columns: Mapping[str, VectorLike]) -> str:
    """Render `index x <columns...>` rows with 17 significant digits"""
    arrays = {name: as_vector(col) for name, col in columns.items()}
    for name, arr in arrays.items():
        if arr.size != grid.n:
            raise DomainError(f"column {name!r} has {arr.size} entries, grid has {grid.n}")

    lines = [" ".join(["index", "x", *arrays.keys()])]
    for i in range(grid.n):
        row = [str(i + 1), f"{grid.points[i]:.17g}"]
        row.extend(f"{arr[i]:.17g}" for arr in arrays.values())
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def write_columns(path: Union[str, Path], grid: Grid, columns: Mapping[str, VectorLike]) -> Path:
    """Write format_columns output to path"""
    path = Path(path)
    with open(path, "w", newline="\n") as f:
        f.write(format_columns(grid, columns))
    logger.debug(f"Wrote {len(columns)} column(s) for {grid.n} grid points to {path}")
    return path
