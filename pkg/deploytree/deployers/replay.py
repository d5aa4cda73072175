from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from deploytree.core.space import DeploymentSpace
from deploytree.deployers.base import Deployer
from deploytree.errors import DeployError, ReplayError, SpaceError

logger = logging.getLogger(__name__)


class GridReplay(Deployer):
    """Exhaustively measured ground truth, replayed by table lookup."""

    def __init__(self, space: DeploymentSpace, values: np.ndarray, source: str = ""):
        if len(values) != space.cardinality:
            raise ReplayError(f"Replay holds {len(values)} values for a grid of {space.cardinality}")
        self.space = space
        self.values = np.asarray(values, dtype=float)
        self.source = source

    @property
    def name(self) -> str:
        return "replay"

    @property
    def function_name(self) -> str:
        return Path(self.source).stem if self.source else ""

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def load(cls, path: str | Path, space: DeploymentSpace) -> "GridReplay":
        """
        Read a ground-truth CSV with one column per dimension plus `metric`.

        Categorical columns may hold labels instead of ordinal codes.
        """
        values = np.full(space.cardinality, np.nan)
        try:
            with open(path, "r", newline="") as file:
                reader = csv.DictReader(file)
                missing = [c for c in (*space.names, "metric") if c not in (reader.fieldnames or ())]
                if missing:
                    raise ReplayError(f"{path} lacks columns {missing}")
                for line, row in enumerate(reader, start=2):
                    point = tuple(_coordinate(space, name, row[name], line) for name in space.names)
                    try:
                        metric = float(row["metric"])
                    except ValueError:
                        raise ReplayError(f"{path}:{line}: non-numeric metric {row['metric']!r}") from None
                    if not math.isfinite(metric):
                        raise ReplayError(f"{path}:{line}: non-finite metric {row['metric']!r}")
                    try:
                        index = space.index_of(point)
                    except SpaceError as e:
                        raise ReplayError(f"{path}:{line}: {e}") from e
                    if not np.isnan(values[index]):
                        raise ReplayError(f"{path}:{line}: duplicate row for {point}")
                    values[index] = metric
        except OSError as e:
            raise ReplayError(f"Unable to read {path}: {e}") from e

        gaps = np.flatnonzero(np.isnan(values))
        if len(gaps):
            raise ReplayError(
                f"{path} misses {len(gaps)} grid points, first {space.point_at(int(gaps[0]))}"
            )
        logger.info(f"Loaded {len(values)} replay values from {path}")
        return cls(space, values, str(path))

    def evaluate(self, point: Sequence[float]) -> float:
        try:
            return float(self.values[self.space.index_of(point)])
        except SpaceError as e:
            raise DeployError("missing-point", tuple(point), str(e)) from e

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        return self.values[self.space.indices_of(X)]


def _coordinate(space: DeploymentSpace, name: str, raw: str, line: int) -> float:
    try:
        return float(raw)
    except ValueError:
        pass
    try:
        return space.encode(name, raw)
    except SpaceError:
        raise ReplayError(f"line {line}: {name}={raw!r} is neither numeric nor a known category") from None


def replay_load(path: str | Path, space: DeploymentSpace) -> GridReplay:
    return GridReplay.load(path, space)


def replay_eval(replay: GridReplay, point: Sequence[float]) -> float:
    return replay.evaluate(point)
