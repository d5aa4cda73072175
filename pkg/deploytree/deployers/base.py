from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from deploytree.core.space import LabeledSample, Point
from deploytree.errors import DeployError

logger = logging.getLogger(__name__)


class Deployer(ABC):
    """Maps a grid point to a measured performance value, or raises DeployError."""

    concurrent_safe: bool = True
    deterministic: bool = True

    @property
    def name(self) -> str:
        return type(self).__name__.lower()

    @property
    def function_name(self) -> str:
        return ""

    @abstractmethod
    def evaluate(self, point: Sequence[float]) -> float: ...

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        return np.asarray([self.evaluate(tuple(row)) for row in np.atleast_2d(X)], dtype=float)


@dataclass
class BatchResult:
    succeeded: list[LabeledSample] = field(default_factory=list)
    failed: list[DeployError] = field(default_factory=list)


def _attempt(deployer: Deployer, point: Point, retries: int) -> LabeledSample | DeployError:
    failure: DeployError | None = None
    for attempt in range(retries + 1):
        try:
            value = deployer.evaluate(point)
            if not math.isfinite(value):
                raise DeployError("overflow", point, f"non-finite value {value}")
            return LabeledSample(point, value)
        except DeployError as e:
            failure = e
            if attempt < retries:
                logger.warning(f"Deployment of {point} failed ({e.kind}), retrying")
    return failure


def deploy_batch(
    deployer: Deployer, points: Sequence[Point], parallelism: int = 1, retries: int = 1
) -> BatchResult:
    """
    Evaluate a batch of points.

    Results come back in lexicographic point order whatever the parallelism,
    so concurrent deployment never changes a run's record.
    """
    canonical = sorted(tuple(float(v) for v in p) for p in points)
    workers = parallelism if deployer.concurrent_safe else 1
    if workers > 1 and len(canonical) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda p: _attempt(deployer, p, retries), canonical))
    else:
        outcomes = [_attempt(deployer, p, retries) for p in canonical]

    result = BatchResult()
    for outcome in outcomes:
        if isinstance(outcome, DeployError):
            logger.error(f"Dropping {outcome.point}: {outcome}")
            result.failed.append(outcome)
        else:
            result.succeeded.append(outcome)
    return result
