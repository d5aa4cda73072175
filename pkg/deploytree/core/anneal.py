"""Simulated-annealing search for oblique split hyperplanes."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from deploytree.core.linmodel import fit_r_squared
from deploytree.core.space import LabeledSample, Side, samples_to_arrays
from deploytree.utilities.config import AnnealSchedule

logger = logging.getLogger(__name__)

# score(X, y, below_mask) -> float, lower is better
ScoreFn = Callable[[np.ndarray, np.ndarray, np.ndarray], float]


@dataclass(frozen=True)
class Hyperplane:
    """The split line a1*x1 + ... + an*xn + offset = 0; value <= 0 is the below-or-on side."""

    coeffs: tuple[float, ...]
    offset: float

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "offset", float(self.offset))
        if not all(math.isfinite(c) for c in coeffs) or not math.isfinite(self.offset):
            raise ValueError(f"Hyperplane has non-finite coefficients: {coeffs}, {self.offset}")
        if not any(coeffs):
            raise ValueError("Hyperplane coefficients must not all be zero.")

    @classmethod
    def axis(cls, n_dims: int, dim: int, threshold: float) -> "Hyperplane":
        """The flat cut x[dim] <= threshold."""
        coeffs = [0.0] * n_dims
        coeffs[dim] = 1.0
        return cls(tuple(coeffs), -threshold)

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        # Fixed summation order so a point evaluates identically alone or in a batch.
        X = np.atleast_2d(np.asarray(X, dtype=float))
        values = np.zeros(len(X))
        for i, a in enumerate(self.coeffs):
            values = values + a * X[:, i]
        return values + self.offset

    def below(self, X: np.ndarray) -> np.ndarray:
        return self.evaluate(X) <= 0

    def side(self, point: Sequence[float]) -> Side:
        value = self.evaluate(np.asarray(point, dtype=float)[None, :])[0]
        return Side.BELOW if value <= 0 else Side.ABOVE

    def normalized(self) -> "Hyperplane":
        """Unit-norm coefficients with the first nonzero coefficient positive."""
        vector = np.asarray(self.coeffs)
        norm = float(np.linalg.norm(vector))
        first = next(c for c in self.coeffs if c != 0)
        scale = (1.0 if first > 0 else -1.0) / norm
        return Hyperplane(tuple(float(c * scale) for c in vector), self.offset * scale)

    def scaled(self, factor: float) -> "Hyperplane":
        return Hyperplane(tuple(c * factor for c in self.coeffs), self.offset * factor)

    @property
    def nonzero(self) -> int:
        return sum(1 for c in self.coeffs if c != 0)

    def to_dict(self) -> dict:
        return {"coeffs": list(self.coeffs), "offset": self.offset}

    @classmethod
    def from_dict(cls, data: dict) -> "Hyperplane":
        return cls(tuple(data["coeffs"]), data["offset"])


def regression_score(X: np.ndarray, y: np.ndarray, below: np.ndarray) -> float:
    """-(|L1| R²(L1) + |L2| R²(L2)) / (|L1| + |L2|)."""
    n_below = int(below.sum())
    n_above = len(y) - n_below
    if n_below == 0 or n_above == 0:
        raise ValueError("Both sides of a split must hold samples.")
    r2_below = fit_r_squared(X[below], y[below])
    r2_above = fit_r_squared(X[~below], y[~below])
    return -(n_below * r2_below + n_above * r2_above) / (n_below + n_above)


def split_score(left: Sequence[LabeledSample], right: Sequence[LabeledSample]) -> float:
    if not left or not right:
        raise ValueError("Both sides of a split must hold samples.")
    X, y = samples_to_arrays(list(left) + list(right))
    below = np.arange(len(y)) < len(left)
    return regression_score(X, y, below)


def perturb(
    plane: Hyperplane,
    temp: float,
    scale: Sequence[float],
    rng: np.random.Generator,
    offset_scale: float = 1.0,
) -> Hyperplane:
    """Gaussian neighbour of `plane`; spread shrinks with the temperature."""
    if temp <= 0:
        raise ValueError("Temperature must be positive.")
    coeffs = np.asarray(plane.coeffs)
    scale = np.asarray(scale, dtype=float)
    while True:
        moved = coeffs + rng.normal(0.0, temp * scale)
        offset = plane.offset + rng.normal(0.0, temp * offset_scale)
        if np.any(moved != 0):
            return Hyperplane(tuple(float(c) for c in moved), float(offset))


def accept(current_score: float, candidate_score: float, temp: float, rng: np.random.Generator) -> bool:
    """Metropolis rule."""
    if temp <= 0:
        raise ValueError("Temperature must be positive.")
    if candidate_score <= current_score:
        return True
    return bool(rng.random() < math.exp(-(candidate_score - current_score) / temp))


def _valid(below: np.ndarray, min_side: int) -> bool:
    n_below = int(below.sum())
    return n_below >= min_side and len(below) - n_below >= min_side


def best_axis_split(
    X: np.ndarray, y: np.ndarray, score_fn: ScoreFn = regression_score, min_side: int = 1
) -> tuple[Hyperplane, float] | None:
    """Exhaustive flat search over midpoints between adjacent observed values."""
    best: tuple[Hyperplane, float] | None = None
    n_dims = X.shape[1]
    for dim in range(n_dims):
        values = np.unique(X[:, dim])
        for lo, hi in zip(values, values[1:]):
            threshold = (lo + hi) / 2
            below = X[:, dim] <= threshold
            if not _valid(below, min_side):
                continue
            score = score_fn(X, y, below)
            if best is None or score < best[1]:
                best = (Hyperplane.axis(n_dims, dim, threshold), score)
    return best


def neighborhood_scale(X: np.ndarray, sched: AnnealSchedule) -> np.ndarray:
    if sched.neighborhood_scale is not None:
        if len(sched.neighborhood_scale) != X.shape[1]:
            raise ValueError("neighborhood_scale must have one entry per dimension")
        return np.asarray(sched.neighborhood_scale, dtype=float)
    spread = np.ptp(X, axis=0)
    return 1.0 / np.where(spread > 0, spread, 1.0)


def sa_split_arrays(
    X: np.ndarray,
    y: np.ndarray,
    sched: AnnealSchedule,
    rng: np.random.Generator,
    score_fn: ScoreFn = regression_score,
    min_side: int = 1,
) -> tuple[Hyperplane, float] | None:
    if len(y) == 0:
        raise ValueError("Cannot search a split over zero samples.")
    start = best_axis_split(X, y, score_fn, min_side)
    if start is None:
        return None
    incumbent, best_score = start

    scale = neighborhood_scale(X, sched)

    for restart in range(sched.restarts + 1):
        # Walk in units where the samples' projections span 1, so the default
        # 1/range coefficient noise moves every dimension comparably.
        span = float(np.ptp(incumbent.evaluate(X) - incumbent.offset)) or 1.0
        current = incumbent.scaled(1.0 / span)
        current_score = best_score
        for step in range(sched.max_iters):
            temp = sched.temperature(step)
            candidate = perturb(current, temp, scale, rng, sched.offset_scale)
            plane = candidate.normalized()
            below = plane.below(X)
            if not _valid(below, min_side):
                continue
            score = score_fn(X, y, below)
            if accept(current_score, score, temp, rng):
                current, current_score = candidate, score
            if score < best_score:
                incumbent, best_score = plane, score
        logger.debug(f"SA pass {restart}: best score {best_score:.6f}")

    return incumbent, best_score


def sa_split(
    samples: Sequence[LabeledSample],
    sched: AnnealSchedule,
    rng: np.random.Generator,
    score_fn: ScoreFn = regression_score,
    min_side: int = 1,
) -> tuple[Hyperplane, float] | None:
    """
    Near-optimal oblique split of a leaf's samples.

    The search starts from the best flat split and tracks the best plane seen
    independently of the annealing walk. Returns None when no plane leaves at
    least `min_side` samples on each side.
    """
    if not samples:
        raise ValueError("Cannot search a split over zero samples.")
    X, y = samples_to_arrays(samples)
    return sa_split_arrays(X, y, sched, rng, score_fn, min_side)
