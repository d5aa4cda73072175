"""The adaptive profiling loop: expand, sample, deploy, accumulate."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pendulum

from deploytree.core.linmodel import BaggedLinearModel, fit_arrays, fold_assignment
from deploytree.core.models import FinalModel, LinearFinalModel
from deploytree.core.obtree import ObliqueTree, expand_tree, fit_leaf_models, rebuild_from_scratch
from deploytree.core.sampler import CostModel, LeafScore, allocate, draw, score_leaves
from deploytree.core.space import DeploymentSpace, LabeledSample, Point, samples_to_arrays
from deploytree.deployers.base import Deployer, deploy_batch
from deploytree.errors import ConfigError, InsufficientDataError
from deploytree.utilities.config import ProfilerConfig
from deploytree.utilities.seeding import derive_rng, derive_seed

logger = logging.getLogger(__name__)

SELECTION_STREAM = 7


def make_run_id(kind: str, seed: int) -> str:
    return f"{kind}-{pendulum.now('UTC').format('YYYYMMDDTHHmmss')}-{seed}"


@dataclass
class IterationRecord:
    iteration: int
    requested: int
    leaf_count: int
    scores: list[dict]
    drawn: list[list[float]]
    outputs: list[float]
    failures: list[dict]
    wall_ms: float


@dataclass
class RunLog:
    run_id: str
    seed: int
    started_at: str
    records: list[IterationRecord] = field(default_factory=list)
    final_kind: str | None = None
    candidate_errors: dict[str, float] = field(default_factory=dict)
    wall_ms: float = 0.0

    @property
    def samples(self) -> list[LabeledSample]:
        return [
            LabeledSample(tuple(p), y)
            for record in self.records
            for p, y in zip(record.drawn, record.outputs)
        ]

    @property
    def points(self) -> list[Point]:
        return [tuple(p) for record in self.records for p in record.drawn]

    def summary(self) -> dict:
        return {
            "run_id": self.run_id,
            "seed": self.seed,
            "started_at": self.started_at,
            "iterations": len(self.records),
            "samples": sum(len(r.drawn) for r in self.records),
            "failures": sum(len(r.failures) for r in self.records),
            "final_kind": self.final_kind,
            "candidate_errors": self.candidate_errors,
            "wall_ms": self.wall_ms,
        }

    def fingerprint(self) -> str:
        """Hash of everything except timing, for determinism checks."""
        content = [
            {k: v for k, v in asdict(r).items() if k != "wall_ms"} for r in self.records
        ]
        content.append({"final_kind": self.final_kind, "candidate_errors": self.candidate_errors})
        return hashlib.sha256(json.dumps(content, sort_keys=True).encode()).hexdigest()

    def write(self, directory: str | Path) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        lines = directory / "runlog.jsonl"
        with open(lines, "w") as file:
            for record in self.records:
                file.write(json.dumps(asdict(record)) + "\n")
        summary = directory / "summary.json"
        with open(summary, "w") as file:
            json.dump(self.summary(), file, indent=4)
        return lines, summary

    @classmethod
    def read(cls, directory: str | Path) -> "RunLog":
        directory = Path(directory)
        try:
            with open(directory / "summary.json", "r") as file:
                summary = json.load(file)
            with open(directory / "runlog.jsonl", "r") as file:
                records = [IterationRecord(**json.loads(line)) for line in file if line.strip()]
        except (OSError, json.JSONDecodeError, TypeError) as e:
            raise ConfigError(f"Unable to read run log in {directory}: {e}") from e
        return cls(
            summary["run_id"],
            summary["seed"],
            summary["started_at"],
            records,
            summary.get("final_kind"),
            summary.get("candidate_errors", {}),
            summary.get("wall_ms", 0.0),
        )


@dataclass(frozen=True)
class Selection:
    model: FinalModel
    kind: str
    cv_errors: dict[str, float]


def _train(
    kind: str,
    space: DeploymentSpace,
    samples: Sequence[LabeledSample],
    cfg: ProfilerConfig,
    seed: int,
) -> FinalModel:
    X, y = samples_to_arrays(samples)
    match kind:
        case "tree":
            tree = rebuild_from_scratch(space, samples, cfg.tree, cfg.sa, seed)
            return fit_leaf_models(tree, cfg.folds, seed)
        case "global-ols":
            return LinearFinalModel(fit_arrays(X, y))
        case "bagged-linear":
            return BaggedLinearModel.fit(X, y, cfg.bags, derive_rng(seed, SELECTION_STREAM, 1))
    raise ConfigError(f"Unknown final model kind {kind}")


def select_final_model(
    space: DeploymentSpace,
    samples: Sequence[LabeledSample],
    pool: Sequence[str],
    cfg: ProfilerConfig,
    seed: int,
) -> Selection:
    """
    Cross-validate every candidate on shared folds and retrain the winner
    on all samples. Ties (within rounding) go to the earlier pool entry.
    """
    if not pool:
        raise ConfigError("The final model pool is empty.")
    if len(samples) < 2:
        raise InsufficientDataError("Model selection needs at least two samples.")
    X, y = samples_to_arrays(samples)
    assignment = fold_assignment(len(samples), cfg.selection_folds, derive_rng(seed, SELECTION_STREAM))
    errors: dict[str, float] = {}
    for kind in pool:
        residuals = np.empty(len(samples))
        for fold in np.unique(assignment):
            held = assignment == fold
            train = [s for s, h in zip(samples, held) if not h]
            model = _train(kind, space, train, cfg, seed)
            residuals[held] = y[held] - model.predict_many(X[held])
        errors[kind] = math.fsum(residuals * residuals) / len(samples)

    best = pool[0]
    for kind in pool[1:]:
        if errors[kind] < errors[best] and not math.isclose(
            errors[kind], errors[best], rel_tol=1e-9, abs_tol=1e-12
        ):
            best = kind
    logger.info(f"Final model: {best} (CV errors {errors})")
    return Selection(_train(best, space, samples, cfg, seed), best, errors)


class AdaptiveProfiler:
    """
    Drives one profiling run.

    The first batch is drawn uniformly; every later batch is allocated over
    the leaves of a tree that is either rebuilt from all samples (offline) or
    expanded in place (online).
    """

    def __init__(self, space: DeploymentSpace, deployer: Deployer, cfg: ProfilerConfig, run_id: str | None = None):
        self.space = space
        self.deployer = deployer
        self.cfg = cfg
        self.cost_model = CostModel.from_config(cfg.cost, space) if cfg.cost else None
        self.log = RunLog(run_id or make_run_id("profile", cfg.seed), cfg.seed, pendulum.now("UTC").to_iso8601_string())
        self.samples: list[LabeledSample] = []
        self.taken: set[int] = set()
        self.tree: ObliqueTree | None = None
        self._rng = np.random.default_rng(cfg.seed)

    @property
    def target(self) -> int:
        return min(self.cfg.budget_B, self.space.cardinality)

    def _grow(self, iteration: int) -> ObliqueTree:
        seed = derive_seed(self.cfg.seed, iteration)
        if self.cfg.retrain == "offline":
            tree = rebuild_from_scratch(self.space, self.samples, self.cfg.tree, self.cfg.sa, seed)
        else:
            current = self.tree or ObliqueTree.single_leaf(self.space)
            tree = expand_tree(current, self.samples, self.cfg.tree, self.cfg.sa, seed)
        return fit_leaf_models(tree, self.cfg.folds, seed)

    def _plan(self, iteration: int, k: int) -> tuple[list[Point], list[LeafScore], int]:
        if not self.samples:
            indices = self.space.uniform_indices(k, self._rng, exclude=self.taken)
            return [self.space.point_at(i) for i in indices], [], 1

        self.tree = self._grow(iteration)
        scores = allocate(score_leaves(self.tree, self.cfg.weights, self.taken, self.cost_model), k)
        regions = {leaf.id: leaf.region for leaf in self.tree.leaves()}
        points: list[Point] = []
        for score in scores:
            if score.allocation:
                points.extend(draw(self.space, regions[score.leaf_id], score.allocation, self.taken, self._rng))
        return points, scores, self.tree.n_leaves

    def run(self) -> tuple[FinalModel, RunLog]:
        started = time.perf_counter()
        shortfall = 0
        iteration = 0
        while len(self.samples) < self.target:
            available = self.space.cardinality - len(self.taken)
            if available == 0:
                logger.warning(f"[{self.log.run_id}] Grid exhausted at {len(self.samples)} samples")
                break
            k = min(self.cfg.batch_b + shortfall, self.target - len(self.samples), available)
            tick = time.perf_counter()
            points, scores, leaf_count = self._plan(iteration, k)
            batch = deploy_batch(self.deployer, points, self.cfg.parallelism)
            for sample in batch.succeeded:
                self.samples.append(sample)
                self.taken.add(self.space.index_of(sample.input))
            for failure in batch.failed:
                self.taken.add(self.space.index_of(failure.point))
            shortfall = len(batch.failed)

            self.log.records.append(
                IterationRecord(
                    iteration=iteration,
                    requested=k,
                    leaf_count=leaf_count,
                    scores=[asdict(s) for s in scores],
                    drawn=[list(s.input) for s in batch.succeeded],
                    outputs=[s.output for s in batch.succeeded],
                    failures=[
                        {"point": list(f.point), "kind": f.kind, "detail": f.detail} for f in batch.failed
                    ],
                    wall_ms=(time.perf_counter() - tick) * 1000,
                )
            )
            logger.info(
                f"[{self.log.run_id}] iteration {iteration}: {leaf_count} leaves, "
                f"{len(batch.succeeded)}/{k} deployed, {len(self.samples)}/{self.target} total"
            )
            iteration += 1

        model = self._finalize()
        self.log.wall_ms = (time.perf_counter() - started) * 1000
        return model, self.log

    def _finalize(self) -> FinalModel:
        if len(self.samples) < 2:
            # Too few samples to cross-validate anything.
            logger.warning(f"[{self.log.run_id}] Only {len(self.samples)} samples, falling back to OLS")
            if not self.samples:
                raise InsufficientDataError("No deployment succeeded.")
            X, y = samples_to_arrays(self.samples)
            self.log.final_kind = "global-ols"
            return LinearFinalModel(fit_arrays(X, y))
        selection = select_final_model(
            self.space, self.samples, self.cfg.final_model_pool, self.cfg, self.cfg.seed
        )
        self.log.final_kind = selection.kind
        self.log.candidate_errors = selection.cv_errors
        return selection.model


def run(space: DeploymentSpace, deployer: Deployer, cfg: ProfilerConfig) -> tuple[FinalModel, RunLog]:
    return AdaptiveProfiler(space, deployer, cfg).run()
