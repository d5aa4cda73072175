import json
import math
import os
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from deploytree.errors import ConfigError
from deploytree.utilities import constants

FinalModelKind = Literal["tree", "global-ols", "bagged-linear"]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class Weights(_Frozen):
    """Leaf-score weights: error exploitation, size exploration and cost penalty."""

    w_error: float = Field(1.0, ge=0)
    w_size: float = Field(0.5, ge=0)
    w_cost: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _exploration_or_exploitation(self):
        if self.w_error + self.w_size <= 0:
            raise ValueError("w_error + w_size must be positive")
        return self


class AnnealSchedule(_Frozen):
    max_iters: int = Field(500, gt=0)
    initial_temp: float = Field(1.0, gt=0)
    cooling_rate: float = Field(0.99, gt=0, lt=1)
    # Temperature restarts from the incumbent; 0 disables re-annealing.
    restarts: int = Field(0, ge=0)
    # None means 1 / (range of each dimension over the leaf's samples).
    neighborhood_scale: tuple[float, ...] | None = None
    offset_scale: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _positive_scale(self):
        if self.neighborhood_scale is not None and any(
            not math.isfinite(s) or s <= 0 for s in self.neighborhood_scale
        ):
            raise ValueError("neighborhood_scale entries must be positive and finite")
        return self

    def temperature(self, step: int) -> float:
        return self.initial_temp * self.cooling_rate**step


class TreeConfig(_Frozen):
    mode: Literal["oblique", "flat"] = "oblique"
    split_scorer: Literal["regression", "variance_reduction"] = "regression"
    # None means n + 2 for an n-dimensional space.
    min_leaf_samples: int | None = Field(None, ge=1)
    min_split_gain: float = 0.01
    workers: int = Field(1, ge=1)

    def leaf_minimum(self, n_dims: int) -> int:
        return self.min_leaf_samples if self.min_leaf_samples is not None else n_dims + 2


class CostConfig(_Frozen):
    """Built-in deployment cost: product, sum, or a single named dimension."""

    kind: Literal["product", "sum", "single"]
    dims: tuple[str, ...]

    @model_validator(mode="after")
    def _arity(self):
        if not self.dims:
            raise ValueError("cost model needs at least one dimension")
        if self.kind == "single" and len(self.dims) != 1:
            raise ValueError("single cost model takes exactly one dimension")
        return self


class ProfilerConfig(_Frozen):
    budget_B: int = Field(100, gt=0)
    batch_b: int = Field(10, gt=0)
    weights: Weights = Weights()
    tree: TreeConfig = TreeConfig()
    sa: AnnealSchedule = AnnealSchedule()
    retrain: Literal["online", "offline"] = "offline"
    seed: int = Field(0, ge=0, lt=2**64)
    final_model_pool: tuple[FinalModelKind, ...] = ("tree", "global-ols", "bagged-linear")
    folds: int = Field(constants.DEFAULT_FOLDS, ge=2)
    selection_folds: int = Field(5, ge=2)
    bags: int = Field(constants.DEFAULT_BAGS, ge=1)
    parallelism: int = Field(1, ge=1)
    cost: CostConfig | None = None

    @model_validator(mode="after")
    def _budget(self):
        if self.batch_b > self.budget_B:
            raise ValueError("batch_b must not exceed budget_B")
        if not self.final_model_pool:
            raise ValueError("final_model_pool must not be empty")
        return self

    @property
    def iterations(self) -> int:
        return math.ceil(self.budget_B / self.batch_b)


class SyntheticConfig(_Frozen):
    kind: str = "LIN"
    seed: int = 0
    dims: int = Field(2, ge=1)
    levels: int = Field(constants.SYNTHETIC_LEVELS_2D, ge=1)


class ReplayConfig(_Frozen):
    path: str


class CommandConfig(_Frozen):
    template: str
    timeout_secs: float = Field(60.0, gt=0)


class DeployerConfig(_Frozen):
    kind: Literal["synthetic", "replay", "command"] = "synthetic"
    synthetic: SyntheticConfig = SyntheticConfig()
    replay: ReplayConfig | None = None
    command: CommandConfig | None = None

    @model_validator(mode="after")
    def _section_present(self):
        if self.kind == "replay" and self.replay is None:
            raise ValueError("deployer.kind 'replay' needs a replay section")
        if self.kind == "command" and self.command is None:
            raise ValueError("deployer.kind 'command' needs a command section")
        return self


class RunConfig(_Frozen):
    # Space definition JSON; synthetic deployers fall back to their default grid.
    space: str | None = None
    deployer: DeployerConfig = DeployerConfig()
    profiler: ProfilerConfig = ProfilerConfig()
    output_dir: str = constants.DEFAULT_OUTPUT_DIR


class ExperimentConfig(_Frozen):
    space: str | None = None
    deployer: DeployerConfig = DeployerConfig()
    # Exactly one of sampling_rates (percent of |D|) or budgets drives the B axis.
    sampling_rates: tuple[float, ...] | None = None
    budgets: tuple[int, ...] | None = None
    ratios: tuple[int, ...] = (10,)
    weights: tuple[Weights, ...] = (Weights(),)
    modes: tuple[Literal["oblique", "flat"], ...] = ("oblique",)
    scorers: tuple[Literal["regression", "variance_reduction"], ...] = ("regression",)
    retrains: tuple[Literal["online", "offline"], ...] = ("offline",)
    methods: tuple[Literal["dta", "uni"], ...] = ("dta", "uni")
    repetitions: int = Field(constants.DEFAULT_REPETITIONS, ge=1)
    base_seed: int = Field(0, ge=0)
    profiler: ProfilerConfig = ProfilerConfig()
    test_set: Literal["all", "near", "mix"] = "all"
    eps: float = Field(1e-3, gt=0)
    jobs: int = Field(1, ge=1)
    output_dir: str = constants.DEFAULT_OUTPUT_DIR

    @model_validator(mode="after")
    def _budget_axis(self):
        if (self.sampling_rates is None) == (self.budgets is None):
            raise ValueError("set exactly one of sampling_rates or budgets")
        if any(r <= 0 for r in self.ratios):
            raise ValueError("B/b ratios must be positive")
        return self


def apply_overrides(data: dict, overrides: dict) -> dict:
    """
    Merge dotted-key overrides into a nested config dict.

    Args:
        data (dict): Config as loaded from JSON.
        overrides (dict): e.g. {"profiler.sa.max_iters": 200}; None values are skipped.

    Returns:
        dict: A new merged dict.
    """
    merged = json.loads(json.dumps(data))
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = merged
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"Cannot override {dotted}: {key} is not a section")
        node[leaf] = value
    return merged


def _read(path: str | Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r") as file:
            return json.load(file)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Unable to read config {path}: {e}") from e


def load_run_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    data = apply_overrides(_read(path), overrides or {})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def load_experiment_config(
    path: str | Path | None = None, overrides: dict | None = None
) -> ExperimentConfig:
    data = apply_overrides(_read(path), overrides or {})
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def resolve_output_dir(configured: str, flag: str | None = None) -> Path:
    """Flag beats the environment, which beats the config file."""
    chosen = flag or os.environ.get(constants.OUTPUT_DIR_ENV) or configured
    path = Path(chosen)
    path.mkdir(parents=True, exist_ok=True)
    return path
