import math
from typing import Literal

import numpy as np

from deploytree.core.space import DeploymentSpace
from deploytree.deployers.synthetic import RIDGE_KINDS, SyntheticFunction
from deploytree.errors import ConfigError, EmptyTestSetError

TestSetMode = Literal["all", "near", "mix"]


def abnormality_testset(
    f: SyntheticFunction,
    space: DeploymentSpace,
    eps: float = 1e-3,
    mode: TestSetMode = "near",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """
    Grid points close to the f1 = 0 ridge of a ridge-shaped function.

    Distance is |f1| / ||a|| in the function's scaled coordinates. "mix"
    pairs every near point with one point drawn uniformly from the far
    ones; "all" returns the whole grid.
    """
    grid = space.grid
    if mode == "all":
        return grid
    if f.kind not in RIDGE_KINDS:
        raise ConfigError(f"{f.kind.value} has no ridge; abnormality test sets need one of {[k.value for k in RIDGE_KINDS]}")

    distance = f.ridge_distance(grid)
    near = distance < eps if math.isfinite(eps) else np.ones(len(grid), dtype=bool)
    if not near.any():
        raise EmptyTestSetError(
            f"No grid point lies within {eps:g} of the ridge; the closest is {float(distance.min()):.3g} away"
        )
    if mode == "near":
        return grid[near]

    far = np.flatnonzero(~near)
    rng = rng or np.random.default_rng(0)
    count = min(int(near.sum()), len(far))
    picked = np.sort(rng.choice(far, size=count, replace=False)) if count else np.empty(0, dtype=np.int64)
    return np.concatenate([grid[near], grid[picked]])
