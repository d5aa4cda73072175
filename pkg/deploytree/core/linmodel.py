"""Least-squares kernel shared by split scoring, leaf scoring and final model selection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from deploytree.core.space import LabeledSample, samples_to_arrays
from deploytree.errors import InsufficientDataError


@dataclass(frozen=True)
class LinearModel:
    coeffs: tuple[float, ...]
    intercept: float

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(len(X), self.intercept)
        for i, a in enumerate(self.coeffs):
            out = out + a * X[:, i]
        return out

    def predict(self, point: Sequence[float]) -> float:
        return float(self.predict_many(np.asarray(point, dtype=float)[None, :])[0])

    def to_dict(self) -> dict:
        return {"coeffs": list(self.coeffs), "intercept": self.intercept}

    @classmethod
    def from_dict(cls, data: dict) -> "LinearModel":
        return cls(tuple(float(c) for c in data["coeffs"]), float(data["intercept"]))


@dataclass(frozen=True)
class FitReport:
    model: LinearModel
    r_squared: float
    # None marks a leaf too small to cross-validate (max uncertainty).
    cv_error: float | None

    @property
    def uncertain(self) -> bool:
        return self.cv_error is None


def fit_arrays(X: np.ndarray, y: np.ndarray) -> LinearModel:
    """
    Least squares on centred data.

    Centring keeps the intercept out of the minimum-norm objective, so a
    single sample (or identical inputs) yields zero slopes and the mean.
    """
    if len(y) == 0:
        raise InsufficientDataError("Cannot fit a linear model on zero samples.")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n_dims = X.shape[1]
    if np.ptp(y) == 0:
        return LinearModel((0.0,) * n_dims, float(y[0]))
    x_mean = X.mean(axis=0)
    y_mean = math.fsum(y) / len(y)
    beta, *_ = np.linalg.lstsq(X - x_mean, y - y_mean, rcond=None)
    intercept = y_mean - float(x_mean @ beta)
    return LinearModel(tuple(float(b) for b in beta), intercept)


def fit_ols(samples: Sequence[LabeledSample]) -> LinearModel:
    if not samples:
        raise InsufficientDataError("Cannot fit a linear model on zero samples.")
    return fit_arrays(*samples_to_arrays(samples))


def r_squared_arrays(model: LinearModel, X: np.ndarray, y: np.ndarray) -> float:
    if len(y) == 0:
        raise InsufficientDataError("R² needs at least one sample.")
    y = np.asarray(y, dtype=float)
    residuals = y - model.predict_many(X)
    ss_res = math.fsum(residuals * residuals)
    centred = y - math.fsum(y) / len(y)
    ss_tot = math.fsum(centred * centred)
    if np.ptp(y) == 0:
        return 1.0 if ss_res == 0 else 0.0
    return min(1.0, max(0.0, 1.0 - ss_res / ss_tot))


def r_squared(model: LinearModel, samples: Sequence[LabeledSample]) -> float:
    if not samples:
        raise InsufficientDataError("R² needs at least one sample.")
    return r_squared_arrays(model, *samples_to_arrays(samples))


def fit_r_squared(X: np.ndarray, y: np.ndarray) -> float:
    """R² of the OLS fit on its own training data."""
    return r_squared_arrays(fit_arrays(X, y), X, y)


def fold_assignment(n: int, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold id per sample: a seeded permutation dealt round-robin into min(folds, n) folds."""
    k = min(folds, n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[rng.permutation(n)] = np.arange(n) % k
    return assignment


def cv_error_arrays(
    X: np.ndarray, y: np.ndarray, folds: int, rng: np.random.Generator
) -> float:
    if len(y) < 2:
        raise InsufficientDataError(f"Cross-validation needs 2 samples, got {len(y)}.")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    assignment = fold_assignment(len(y), folds, rng)
    residuals = np.empty(len(y))
    for fold in range(min(folds, len(y))):
        held = assignment == fold
        model = fit_arrays(X[~held], y[~held])
        residuals[held] = y[held] - model.predict_many(X[held])
    return math.fsum(residuals * residuals) / len(y)


def cv_error(samples: Sequence[LabeledSample], folds: int, rng: np.random.Generator) -> float:
    """Mean squared held-out residual over k-fold cross-validation."""
    return cv_error_arrays(*samples_to_arrays(samples), folds, rng)


def _check_pair(predicted: Sequence[float], actual: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if len(predicted) != len(actual):
        raise ValueError(f"Length mismatch: {len(predicted)} predictions, {len(actual)} values")
    if len(actual) == 0:
        raise ValueError("Error metrics need at least one value.")
    return predicted, actual


def mse(predicted: Sequence[float], actual: Sequence[float]) -> float:
    predicted, actual = _check_pair(predicted, actual)
    diff = predicted - actual
    return math.fsum(diff * diff) / len(diff)


def mae(predicted: Sequence[float], actual: Sequence[float]) -> float:
    predicted, actual = _check_pair(predicted, actual)
    return math.fsum(np.abs(predicted - actual)) / len(actual)


@dataclass(frozen=True)
class BaggedLinearModel:
    """Mean of OLS models fitted on bootstrap resamples."""

    members: tuple[LinearModel, ...]

    kind = "bagged-linear"

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray, bags: int, rng: np.random.Generator) -> "BaggedLinearModel":
        if len(y) == 0:
            raise InsufficientDataError("Cannot bag zero samples.")
        members = []
        for _ in range(bags):
            pick = rng.integers(0, len(y), size=len(y))
            members.append(fit_arrays(X[pick], y[pick]))
        return cls(tuple(members))

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return np.mean([m.predict_many(X) for m in self.members], axis=0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "members": [m.to_dict() for m in self.members]}

    @classmethod
    def from_dict(cls, data: dict) -> "BaggedLinearModel":
        return cls(tuple(LinearModel.from_dict(m) for m in data["members"]))
