import numpy as np

from deploytree.core.linmodel import mae, mse
from deploytree.core.models import FinalModel
from deploytree.core.space import DeploymentSpace
from deploytree.deployers.base import Deployer
from deploytree.errors import SpaceError


def evaluate_points(model: FinalModel, X: np.ndarray, truth: np.ndarray) -> tuple[float, float]:
    predicted = model.predict_many(np.atleast_2d(np.asarray(X, dtype=float)))
    return mse(predicted, truth), mae(predicted, truth)


def evaluate_full_grid(model: FinalModel, space: DeploymentSpace, deployer: Deployer) -> tuple[float, float]:
    """(MSE, MAE) of the model against the deployer on every grid point."""
    if not space.enumerable:
        raise SpaceError(f"Cannot evaluate over {space.cardinality} points; the grid is too large to enumerate")
    grid = space.grid
    return evaluate_points(model, grid, deployer.evaluate_many(grid))
