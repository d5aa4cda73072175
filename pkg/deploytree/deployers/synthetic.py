"""Synthetic performance functions with known ground truth."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from deploytree.core.linmodel import fit_r_squared
from deploytree.core.space import DeploymentSpace
from deploytree.deployers.base import Deployer
from deploytree.errors import DeployError, SpaceError
from deploytree.utilities.constants import SYNTHETIC_BOX


class SyntheticKind(str, Enum):
    LIN = "LIN"
    POLY = "POLY"
    EXP = "EXP"
    EXPABS = "EXPABS"
    EXPSQ = "EXPSQ"
    GAUSS = "GAUSS"
    WAVE = "WAVE"
    HAT = "HAT"


# Functions with an f1 = 0 ridge, where abnormality test sets make sense.
RIDGE_KINDS = (SyntheticKind.EXPABS, SyntheticKind.WAVE)


def _weighted_sum(coeffs: Sequence[float], Z: np.ndarray) -> np.ndarray:
    out = np.zeros(len(Z))
    for i, a in enumerate(coeffs):
        out = out + a * Z[:, i]
    return out


@dataclass(frozen=True)
class SyntheticFunction(Deployer):
    """
    One of the eight reference functions, over coordinates optionally mapped
    affinely from the raw grid box onto [-2, 2] per dimension.

        LIN    f1 = sum a_i x_i          POLY   f2 = sum a_i x_i^2
        EXP    e^f1                      EXPABS e^|f1|
        EXPSQ  e^(-f1^2)                 GAUSS  e^(-f2)
        WAVE   cos(f1) e^f1              HAT    f2 e^(-f2)
    """

    kind: SyntheticKind
    coeffs: tuple[float, ...]
    # Raw box mapped onto SYNTHETIC_BOX; None evaluates the raw coordinates.
    lows: tuple[float, ...] | None = None
    highs: tuple[float, ...] | None = None
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SyntheticKind(self.kind))
        object.__setattr__(self, "coeffs", tuple(float(a) for a in self.coeffs))
        if (self.lows is None) != (self.highs is None):
            raise ValueError("lows and highs must be given together")
        if self.lows is not None and not len(self.lows) == len(self.highs) == len(self.coeffs):
            raise ValueError("Scaling box must match the coefficient count")

    @classmethod
    def from_seed(cls, kind: SyntheticKind | str, space: DeploymentSpace, seed: int) -> "SyntheticFunction":
        rng = np.random.default_rng(seed)
        coeffs = tuple(float(a) for a in rng.uniform(-1.0, 1.0, space.n))
        lows = tuple(d.levels[0] for d in space.dims)
        highs = tuple(d.levels[-1] for d in space.dims)
        return cls(SyntheticKind(kind), coeffs, lows, highs, seed)

    @property
    def function_name(self) -> str:
        return self.kind.value

    @property
    def name(self) -> str:
        return "synthetic"

    def scale(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.lows is None:
            return X
        lo, hi = SYNTHETIC_BOX
        lows = np.asarray(self.lows)
        spans = np.asarray(self.highs) - lows
        unit = np.divide(X - lows, spans, out=np.full_like(X, 0.5), where=spans > 0)
        return lo + (hi - lo) * unit

    def linear_part(self, X: np.ndarray) -> np.ndarray:
        return _weighted_sum(self.coeffs, self.scale(X))

    def ridge_distance(self, X: np.ndarray) -> np.ndarray:
        """|f1| / ||a|| in scaled coordinates: distance to the f1 = 0 ridge."""
        return np.abs(self.linear_part(X)) / float(np.linalg.norm(self.coeffs))

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.coeffs):
            raise SpaceError(f"{self.kind.value} takes {len(self.coeffs)} coordinates, got {X.shape[1]}")
        Z = self.scale(X)
        f1 = _weighted_sum(self.coeffs, Z)
        f2 = _weighted_sum(self.coeffs, Z * Z)
        with np.errstate(over="ignore", invalid="ignore"):
            match self.kind:
                case SyntheticKind.LIN:
                    y = f1
                case SyntheticKind.POLY:
                    y = f2
                case SyntheticKind.EXP:
                    y = np.exp(f1)
                case SyntheticKind.EXPABS:
                    y = np.exp(np.abs(f1))
                case SyntheticKind.EXPSQ:
                    y = np.exp(-(f1 * f1))
                case SyntheticKind.GAUSS:
                    y = np.exp(-f2)
                case SyntheticKind.WAVE:
                    y = np.cos(f1) * np.exp(f1)
                case SyntheticKind.HAT:
                    y = f2 * np.exp(-f2)
        bad = ~np.isfinite(y)
        if bad.any():
            point = tuple(X[np.argmax(bad)])
            raise DeployError("overflow", point, f"{self.kind.value} overflows")
        return y

    def evaluate(self, point: Sequence[float]) -> float:
        return float(self.evaluate_many(np.asarray(point, dtype=float)[None, :])[0])


@dataclass(frozen=True)
class PlaneBump(Deployer):
    """A plane with one Gaussian abnormality, in raw grid units."""

    weights: tuple[float, ...]
    center: tuple[float, ...]
    sigma: float = 3.0
    amplitude: float = 20.0

    @classmethod
    def from_seed(
        cls, space: DeploymentSpace, seed: int, sigma_steps: float = 3.0, amplitude: float = 20.0
    ) -> "PlaneBump":
        """Bump centred on a random grid point; sigma is measured in grid steps of the first dimension."""
        rng = np.random.default_rng(seed)
        center = tuple(float(d.levels[int(rng.integers(len(d)))]) for d in space.dims)
        weights = (0.8, 0.2) + (0.0,) * max(0, space.n - 2)
        first = space.dims[0].levels
        step = first[1] - first[0] if len(first) > 1 else 1.0
        return cls(weights[: space.n], center, sigma_steps * step, amplitude)

    @property
    def name(self) -> str:
        return "synthetic"

    @property
    def function_name(self) -> str:
        return "BUMP"

    def bump_box(self, k: float = 3.0) -> tuple[tuple[float, float], ...]:
        return tuple((c - k * self.sigma, c + k * self.sigma) for c in self.center)

    def in_box(self, X: np.ndarray, k: float = 3.0) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        inside = np.ones(len(X), dtype=bool)
        for j, (lo, hi) in enumerate(self.bump_box(k)):
            inside &= (X[:, j] >= lo) & (X[:, j] <= hi)
        return inside

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        distance = np.sum((X - np.asarray(self.center)) ** 2, axis=1)
        return _weighted_sum(self.weights, X) + self.amplitude * np.exp(-distance / (2 * self.sigma**2))

    def evaluate(self, point: Sequence[float]) -> float:
        return float(self.evaluate_many(np.asarray(point, dtype=float)[None, :])[0])


def default_space(dims: int, levels: int) -> DeploymentSpace:
    return DeploymentSpace.from_levels({f"x{i + 1}": range(levels) for i in range(dims)})


def complexity_r2(f: Deployer, space: DeploymentSpace) -> float:
    """R² of the best linear fit over the whole grid."""
    grid = space.grid
    return fit_r_squared(grid, f.evaluate_many(grid))


def classify_complexity(r2: float) -> str:
    if r2 >= 0.85:
        return "LOW"
    if r2 >= 0.3:
        return "AVG"
    return "HIGH"


def dump_grid(path: str | Path, space: DeploymentSpace, deployer: Deployer) -> int:
    """Write the deployer's value at every grid point as a ground-truth CSV."""
    grid = space.grid
    values = deployer.evaluate_many(grid)
    with open(path, "w", newline="") as file:
        writer = csv.writer(file)
        writer.writerow([*space.names, "metric"])
        for row, value in zip(grid, values):
            writer.writerow([format(v, ".17g") for v in row] + [format(value, ".17g")])
    return len(values)


def eval_synthetic(f: SyntheticFunction, point: Sequence[float]) -> float:
    return f.evaluate(point)
