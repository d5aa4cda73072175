from deploytree.core.space import DeploymentSpace
from deploytree.deployers.base import Deployer
from deploytree.deployers.command import CommandDeployer
from deploytree.deployers.replay import GridReplay
from deploytree.deployers.synthetic import PlaneBump, SyntheticFunction, SyntheticKind, default_space
from deploytree.errors import ConfigError
from deploytree.utilities.config import DeployerConfig, SyntheticConfig


def synthetic_deployer(cfg: SyntheticConfig, space: DeploymentSpace) -> Deployer:
    kind = cfg.kind.upper()
    if kind == "BUMP":
        return PlaneBump.from_seed(space, cfg.seed)
    try:
        return SyntheticFunction.from_seed(SyntheticKind(kind), space, cfg.seed)
    except ValueError:
        raise ConfigError(f"Unknown synthetic function {cfg.kind}") from None


def build_deployer(cfg: DeployerConfig, space_path: str | None = None) -> tuple[DeploymentSpace, Deployer]:
    """Resolve the deployment space and the configured backend."""
    if space_path:
        space = DeploymentSpace.from_json(space_path)
    elif cfg.kind == "synthetic":
        space = default_space(cfg.synthetic.dims, cfg.synthetic.levels)
    else:
        raise ConfigError(f"deployer.kind '{cfg.kind}' needs a space definition file")

    match cfg.kind:
        case "synthetic":
            return space, synthetic_deployer(cfg.synthetic, space)
        case "replay":
            return space, GridReplay.load(cfg.replay.path, space)
        case "command":
            return space, CommandDeployer(cfg.command.template, space.names, cfg.command.timeout_secs)
    raise ConfigError(f"Unknown deployer kind {cfg.kind}")
