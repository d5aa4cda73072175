import typer

from deploytree.errors import DeployTreeError
from deploytree.utilities.config import RunConfig, load_run_config
from deploytree.utilities.logging import setup_logging

logger, console = setup_logging()

# Flag name -> dotted config key.
RUN_FLAGS = {
    "space": "space",
    "kind": "deployer.kind",
    "fn": "deployer.synthetic.kind",
    "fn_seed": "deployer.synthetic.seed",
    "dims": "deployer.synthetic.dims",
    "levels": "deployer.synthetic.levels",
    "replay": "deployer.replay.path",
    "command": "deployer.command.template",
    "budget": "profiler.budget_B",
    "batch": "profiler.batch_b",
    "seed": "profiler.seed",
    "retrain": "profiler.retrain",
    "mode": "profiler.tree.mode",
    "scorer": "profiler.tree.split_scorer",
    "w_error": "profiler.weights.w_error",
    "w_size": "profiler.weights.w_size",
    "w_cost": "profiler.weights.w_cost",
    "max_iters": "profiler.sa.max_iters",
    "parallelism": "profiler.parallelism",
}


def run_overrides(**flags) -> dict:
    """Turn CLI flags into dotted overrides; unset flags are skipped."""
    return {RUN_FLAGS[name]: value for name, value in flags.items() if value is not None}


def load_config(config: str | None, **flags) -> RunConfig:
    return load_run_config(config, run_overrides(**flags))


def fail(e: DeployTreeError):
    logger.fatal(f"Error: {e}")
    raise typer.Exit(1)
