"""
Experiment sweeps: the cross product of configured axes times R matched
seeds, each run through the adaptive profiler or the UNI baseline and
scored against ground truth.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from deploytree.bench.abnormality import abnormality_testset
from deploytree.bench.baseline import run_uni_baseline
from deploytree.bench.evaluate import evaluate_points
from deploytree.core.profiler import run as run_profiler
from deploytree.core.sampler import CostModel
from deploytree.core.space import DeploymentSpace, Point
from deploytree.deployers.base import Deployer
from deploytree.deployers.synthetic import SyntheticFunction
from deploytree.errors import ConfigError
from deploytree.utilities.config import ExperimentConfig, ProfilerConfig, Weights
from deploytree.utilities.constants import RESULT_COLUMNS

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = (
    "exp_id",
    "method",
    "B",
    "b",
    "SR",
    "mode",
    "scorer",
    "retrain",
    "w_error",
    "w_size",
    "w_cost",
    "repetitions",
    "failures",
    "median_mse",
    "median_mae",
    "median_cost",
    "median_wall_ms",
    "ratio_vs_uni",
)


@dataclass(frozen=True)
class RunSpec:
    method: str
    B: int
    b: int
    SR: float
    weights: Weights
    mode: str
    scorer: str
    retrain: str
    seed: int

    @property
    def exp_id(self) -> str:
        if self.method == "uni":
            return f"uni-B{self.B}"
        w = self.weights
        return (
            f"dta-B{self.B}-b{self.b}-{self.mode}-{self.scorer}-{self.retrain}"
            f"-w{w.w_error:g}_{w.w_size:g}_{w.w_cost:g}"
        )

    @property
    def key(self) -> tuple:
        # UNI ignores every DTA-only axis, so matched (B, seed) runs are shared.
        if self.method == "uni":
            return ("uni", self.B, self.seed)
        return (self.exp_id, self.seed)

    def profiler_config(self, template: ProfilerConfig) -> ProfilerConfig:
        data = template.model_dump()
        data.update(
            budget_B=self.B,
            batch_b=self.b,
            seed=self.seed,
            retrain=self.retrain,
            weights=self.weights.model_dump(),
        )
        data["tree"].update(mode=self.mode, split_scorer=self.scorer)
        return ProfilerConfig.model_validate(data)


@dataclass(frozen=True)
class RunOutcome:
    mse: float
    mae: float
    wall_ms: float
    cost: float = math.nan
    error: str | None = None


@dataclass(frozen=True)
class _Task:
    spec: RunSpec
    space: DeploymentSpace
    deployer: Deployer
    template: ProfilerConfig
    test_X: np.ndarray
    test_y: np.ndarray


def budget_for(rate: float, space: DeploymentSpace) -> int:
    """SR percent of |D|, rounded half up, at least 1."""
    return max(1, math.floor(rate / 100 * space.cardinality + 0.5))


def batch_for(B: int, ratio: int) -> int:
    return min(B, max(1, math.floor(B / ratio + 0.5)))


def expand_experiment(exp: ExperimentConfig, space: DeploymentSpace) -> list[RunSpec]:
    """The runs of an experiment, in deterministic config order."""
    if exp.sampling_rates is not None:
        budgets = [(budget_for(rate, space), float(rate)) for rate in exp.sampling_rates]
    else:
        budgets = [(B, 100 * B / space.cardinality) for B in exp.budgets]
    too_big = [B for B, _ in budgets if B > space.cardinality]
    if too_big:
        raise ConfigError(f"Budgets {too_big} exceed the {space.cardinality}-point grid")

    specs = []
    for (B, rate), ratio, weights, mode, scorer, retrain, method in itertools.product(
        budgets, exp.ratios, exp.weights, exp.modes, exp.scorers, exp.retrains, exp.methods
    ):
        for rep in range(exp.repetitions):
            specs.append(
                RunSpec(method, B, batch_for(B, ratio), rate, weights, mode, scorer, retrain, exp.base_seed + rep)
            )
    return specs


def total_sample_cost(points: Sequence[Point], cost_model: CostModel) -> float:
    if len(points) == 0:
        return 0.0
    return math.fsum(cost_model.cost_many(np.asarray(points, dtype=float)))


def _execute(task: _Task) -> RunOutcome:
    spec = task.spec
    started = time.perf_counter()
    try:
        cfg = spec.profiler_config(task.template)
        if spec.method == "uni":
            model, log = run_uni_baseline(task.space, task.deployer, spec.B, cfg.final_model_pool, spec.seed, cfg)
        else:
            model, log = run_profiler(task.space, task.deployer, cfg)
        mse, mae = evaluate_points(model, task.test_X, task.test_y)
        cost = math.nan
        if cfg.cost is not None:
            cost = total_sample_cost(log.points, CostModel.from_config(cfg.cost, task.space))
        return RunOutcome(mse, mae, (time.perf_counter() - started) * 1000, cost)
    except Exception as e:
        logger.error(f"{spec.exp_id} seed {spec.seed} failed: {e}")
        return RunOutcome(math.nan, math.nan, (time.perf_counter() - started) * 1000, error=str(e))


def evaluation_set(
    exp: ExperimentConfig, space: DeploymentSpace, deployer: Deployer
) -> tuple[np.ndarray, np.ndarray]:
    """The evaluation set of an experiment and its ground truth."""
    if exp.test_set == "all":
        X = space.grid
    elif isinstance(deployer, SyntheticFunction):
        X = abnormality_testset(deployer, space, exp.eps, exp.test_set, np.random.default_rng(exp.base_seed))
    else:
        raise ConfigError(f"test_set '{exp.test_set}' needs a ridge-shaped synthetic deployer")
    return X, deployer.evaluate_many(X)


def make_row(spec: RunSpec, outcome: RunOutcome, space: DeploymentSpace, deployer: Deployer) -> dict:
    return {
        "exp_id": spec.exp_id,
        "deployer": deployer.name,
        "fn": deployer.function_name,
        "n_dims": space.n,
        "grid": space.cardinality,
        "B": spec.B,
        "b": spec.b,
        "SR": spec.SR,
        "mode": spec.mode,
        "scorer": spec.scorer,
        "retrain": spec.retrain,
        "w_error": spec.weights.w_error,
        "w_size": spec.weights.w_size,
        "w_cost": spec.weights.w_cost,
        "seed": spec.seed,
        "mse": outcome.mse,
        "mae": outcome.mae,
        "wall_ms": outcome.wall_ms,
        # Not part of the results CSV.
        "method": spec.method,
        "cost": outcome.cost,
        "error": outcome.error,
    }


class ResultSink:
    """Single writer for results.csv; rows land in the order they are given."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._file = open(self.path, "w", newline="")
        self._writer = csv.DictWriter(self._file, fieldnames=RESULT_COLUMNS, extrasaction="ignore")
        self._writer.writeheader()
        self.count = 0

    def write(self, row: dict) -> None:
        self._writer.writerow(row)
        self._file.flush()
        self.count += 1

    def close(self) -> None:
        self._file.close()

    def __enter__(self) -> "ResultSink":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _outcomes(tasks: list[_Task], jobs: int) -> Iterator[RunOutcome]:
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(_execute, tasks)
    else:
        for task in tasks:
            yield _execute(task)


def sweep(
    exp: ExperimentConfig,
    space: DeploymentSpace,
    deployer: Deployer,
    results_path: str | Path | None = None,
    on_row: Callable[[dict], None] | None = None,
) -> list[dict]:
    """
    Run every configured run and return one row per (axis combination, seed).

    Rows are emitted in config order whatever `exp.jobs` is; a failed run
    yields a row with NaN errors and the sweep carries on.
    """
    specs = expand_experiment(exp, space)
    test_X, test_y = evaluation_set(exp, space, deployer)
    logger.info(f"Sweep of {len(specs)} runs on {len(test_X)} test points")

    unique: dict[tuple, RunSpec] = {}
    for spec in specs:
        unique.setdefault(spec.key, spec)
    tasks = [_Task(s, space, deployer, exp.profiler, test_X, test_y) for s in unique.values()]
    pending = zip(unique.keys(), _outcomes(tasks, exp.jobs))

    sink = ResultSink(results_path) if results_path else None
    done: dict[tuple, RunOutcome] = {}
    rows = []
    try:
        for spec in specs:
            while spec.key not in done:
                key, outcome = next(pending)
                done[key] = outcome
            row = make_row(spec, done[spec.key], space, deployer)
            rows.append(row)
            if sink:
                sink.write(row)
            if on_row:
                on_row(row)
    finally:
        if sink:
            sink.close()
    return rows


def _nanmedian(values: Iterable[float]) -> float:
    values = np.asarray(list(values), dtype=float)
    if not np.isfinite(values).any():
        return math.nan
    return float(np.nanmedian(values))


def summarize(rows: Sequence[dict]) -> list[dict]:
    """
    Median errors per configuration and the ratio to the UNI median of the
    same budget, over the matched seed set.
    """
    groups: dict[str, dict[int, dict]] = {}
    for row in rows:
        groups.setdefault(row["exp_id"], {}).setdefault(row["seed"], row)

    def median_of(group: dict[int, dict], column: str) -> float:
        return _nanmedian(r[column] for r in group.values())

    uni = {
        next(iter(group.values()))["B"]: median_of(group, "mse")
        for exp_id, group in groups.items()
        if exp_id.startswith("uni-")
    }
    summary = []
    for exp_id, group in groups.items():
        first = next(iter(group.values()))
        median_mse = median_of(group, "mse")
        baseline = uni.get(first["B"], math.nan)
        ratio = median_mse / baseline if baseline and math.isfinite(baseline) else math.nan
        summary.append(
            {
                **{c: first[c] for c in SUMMARY_COLUMNS if c in first},
                "exp_id": exp_id,
                "repetitions": len(group),
                "failures": sum(1 for r in group.values() if r.get("error")),
                "median_mse": median_mse,
                "median_mae": median_of(group, "mae"),
                "median_cost": median_of(group, "cost"),
                "median_wall_ms": median_of(group, "wall_ms"),
                "ratio_vs_uni": ratio,
            }
        )
    return summary


def write_summary(path: str | Path, summary: Sequence[dict]) -> None:
    with open(path, "w", newline="") as file:
        writer = csv.DictWriter(file, fieldnames=SUMMARY_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(summary)


def read_results(path: str | Path) -> list[dict]:
    numeric = {"n_dims", "grid", "B", "b", "seed"}
    rows = []
    with open(path, "r", newline="") as file:
        for row in csv.DictReader(file):
            for column in RESULT_COLUMNS:
                if column in numeric:
                    row[column] = int(row[column])
                elif column in ("SR", "w_error", "w_size", "w_cost", "mse", "mae", "wall_ms"):
                    row[column] = float(row[column])
            row["method"] = "uni" if row["exp_id"].startswith("uni-") else "dta"
            row["cost"] = math.nan
            rows.append(row)
    return rows
