"""Black-box evaluation backends."""

from deploytree.deployers.base import Deployer, deploy_batch
from deploytree.deployers.command import CommandDeployer
from deploytree.deployers.replay import GridReplay
from deploytree.deployers.synthetic import PlaneBump, SyntheticFunction, SyntheticKind

__all__ = [
    "CommandDeployer",
    "Deployer",
    "GridReplay",
    "PlaneBump",
    "SyntheticFunction",
    "SyntheticKind",
    "deploy_batch",
]
