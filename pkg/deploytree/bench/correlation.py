import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from deploytree.core.space import DeploymentSpace
from deploytree.errors import ReplayError, SpaceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Correlation:
    dimension: str
    r: float
    # r is reported as 0 when either side has no variance.
    zero_variance: bool = False


def read_grid_csv(path: str | Path, space: DeploymentSpace | None = None) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Dimension names, inputs and metric column of a ground-truth CSV."""
    try:
        with open(path, "r", newline="") as file:
            reader = csv.DictReader(file)
            fields = reader.fieldnames or []
            if "metric" not in fields:
                raise ReplayError(f"{path} has no metric column")
            names = tuple(f for f in fields if f != "metric")
            rows = list(reader)
    except OSError as e:
        raise ReplayError(f"Unable to read {path}: {e}") from e

    X = np.empty((len(rows), len(names)))
    y = np.empty(len(rows))
    for i, row in enumerate(rows):
        for j, name in enumerate(names):
            raw = row[name]
            try:
                X[i, j] = float(raw)
            except ValueError:
                if space is None:
                    raise ReplayError(f"{path}:{i + 2}: {name}={raw!r} is not numeric") from None
                try:
                    X[i, j] = space.encode(name, raw)
                except SpaceError as e:
                    raise ReplayError(f"{path}:{i + 2}: {e}") from e
        try:
            y[i] = float(row["metric"])
        except ValueError:
            raise ReplayError(f"{path}:{i + 2}: non-numeric metric {row['metric']!r}") from None
    return names, X, y


def pearson_by_dimension(names: tuple[str, ...], X: np.ndarray, y: np.ndarray) -> list[Correlation]:
    report = []
    flat_metric = np.ptp(y) == 0 if len(y) else True
    for j, name in enumerate(names):
        column = X[:, j]
        if flat_metric or np.ptp(column) == 0:
            logger.warning(f"{name}: zero variance, reporting r = 0")
            report.append(Correlation(name, 0.0, True))
            continue
        r, _ = stats.pearsonr(column, y)
        report.append(Correlation(name, float(r)))
    return report


def correlation_report(path: str | Path, space: DeploymentSpace | None = None) -> list[Correlation]:
    return pearson_by_dimension(*read_grid_csv(path, space))
