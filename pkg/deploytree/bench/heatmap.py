import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from deploytree.core.space import DeploymentSpace, Point
from deploytree.utilities.constants import DEFAULT_HEATMAP_BINS


def heatmap(
    points: Sequence[Point],
    space: DeploymentSpace,
    bins_per_dim: int = DEFAULT_HEATMAP_BINS,
    dims: tuple[int, int] = (0, 1),
) -> np.ndarray:
    """
    Count sampled points on a bins x bins grid over two dimensions.

    Bins split each dimension's level indices evenly, so a uniform sample of
    a grid whose level counts divide by `bins_per_dim` fills every bin equally.
    Rows follow dims[0], columns dims[1].
    """
    if bins_per_dim <= 0:
        raise ValueError(f"bins_per_dim must be positive, got {bins_per_dim}")
    if len(set(dims)) != 2 or not all(0 <= d < space.n for d in dims):
        raise ValueError(f"Need two distinct dimensions of a {space.n}-dimensional space, got {dims}")
    counts = np.zeros((bins_per_dim, bins_per_dim), dtype=np.int64)
    if len(points) == 0:
        return counts
    X = np.asarray(points, dtype=float)
    cells = []
    for d in dims:
        dim = space.dims[d]
        positions = np.searchsorted(np.asarray(dim.levels), X[:, d])
        cells.append(positions * bins_per_dim // len(dim))
    np.add.at(counts, (cells[0], cells[1]), 1)
    return counts


def write_heatmap(path: str | Path, counts: np.ndarray) -> None:
    with open(path, "w", newline="") as file:
        csv.writer(file).writerows(counts.tolist())


def coefficient_of_variation(counts: np.ndarray) -> float:
    mean = float(counts.mean())
    return float(counts.std()) / mean if mean > 0 else 0.0
