"""Oblique regression tree with linear leaves."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from deploytree.core.anneal import (
    Hyperplane,
    best_axis_split,
    regression_score,
    sa_split_arrays,
)
from deploytree.core.linmodel import (
    FitReport,
    LinearModel,
    cv_error_arrays,
    fit_arrays,
    fit_r_squared,
    r_squared_arrays,
)
from deploytree.core.space import (
    DeploymentSpace,
    LabeledSample,
    Region,
    Side,
    region_grid_count,
    samples_to_arrays,
)
from deploytree.errors import InsufficientDataError, PartitionError
from deploytree.utilities.config import AnnealSchedule, TreeConfig
from deploytree.utilities.seeding import derive_rng

logger = logging.getLogger(__name__)

SPLIT_STREAM = 0
CV_STREAM = 1


@dataclass(frozen=True)
class Leaf:
    id: int
    samples: tuple[LabeledSample, ...]
    region: Region
    report: FitReport | None = None


@dataclass(frozen=True)
class SplitNode:
    plane: Hyperplane
    below: "Node"
    above: "Node"


Node = Union[Leaf, SplitNode]


@dataclass(frozen=True)
class ObliqueTree:
    """
    Immutable tree partitioning a deployment space.

    Every operation returns a new tree; leaf ids are assigned in creation
    order and never reused.
    """

    space: DeploymentSpace
    root: Node
    next_id: int

    kind = "tree"

    @classmethod
    def single_leaf(cls, space: DeploymentSpace, samples: Sequence[LabeledSample] = ()) -> "ObliqueTree":
        return cls(space, Leaf(0, tuple(samples), Region()), 1)

    def leaves(self) -> list[Leaf]:
        found: list[Leaf] = []
        stack: list[Node] = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                found.append(node)
            else:
                stack.append(node.above)
                stack.append(node.below)
        return found

    def split_nodes(self) -> list[SplitNode]:
        found: list[SplitNode] = []
        stack: list[Node] = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, SplitNode):
                found.append(node)
                stack.extend((node.above, node.below))
        return found

    @property
    def n_leaves(self) -> int:
        return len(self.leaves())

    def route(self, X: np.ndarray) -> np.ndarray:
        """Leaf id of every row of X; on-plane points go below."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(len(X), dtype=np.int64)

        def walk(node: Node, rows: np.ndarray) -> None:
            if isinstance(node, Leaf):
                out[rows] = node.id
                return
            below = node.plane.below(X[rows])
            walk(node.below, rows[below])
            walk(node.above, rows[~below])

        walk(self.root, np.arange(len(X)))
        return out

    def leaf_for(self, point: Sequence[float]) -> Leaf:
        node = self.root
        while isinstance(node, SplitNode):
            node = node.below if node.plane.side(point) is Side.BELOW else node.above
        return node

    def grid_counts(self) -> dict[int, int]:
        if self.space.enumerable:
            ids, counts = np.unique(self.route(self.space.grid), return_counts=True)
            found = dict(zip(ids.tolist(), counts.tolist()))
            return {leaf.id: int(found.get(leaf.id, 0)) for leaf in self.leaves()}
        return {leaf.id: region_grid_count(self.space, leaf.region) for leaf in self.leaves()}

    def with_samples(self, samples: Sequence[LabeledSample]) -> "ObliqueTree":
        """Redistribute `samples` over the current leaves."""
        for s in samples:
            if not self.space.contains(s.input):
                raise PartitionError(f"Sample {s.input} lies outside every leaf region")
        if samples:
            X, _ = samples_to_arrays(samples)
            ids = self.route(X)
        else:
            ids = np.empty(0, dtype=np.int64)
        groups: dict[int, list[LabeledSample]] = {}
        for s, leaf_id in zip(samples, ids.tolist()):
            groups.setdefault(leaf_id, []).append(s)

        def rebuild(node: Node) -> Node:
            if isinstance(node, Leaf):
                return replace(node, samples=tuple(groups.get(node.id, ())), report=None)
            return SplitNode(node.plane, rebuild(node.below), rebuild(node.above))

        return replace(self, root=rebuild(self.root))

    def predict(self, point: Sequence[float]) -> float:
        leaf = self.leaf_for(point)
        if leaf.report is None:
            raise ValueError(f"Leaf {leaf.id} has no fitted model; run fit_leaf_models first.")
        return leaf.report.model.predict(point)

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ids = self.route(X)
        out = np.empty(len(X))
        for leaf in self.leaves():
            rows = ids == leaf.id
            if not rows.any():
                continue
            if leaf.report is None:
                raise ValueError(f"Leaf {leaf.id} has no fitted model; run fit_leaf_models first.")
            out[rows] = leaf.report.model.predict_many(X[rows])
        return out

    def to_dict(self) -> dict:
        counts = self.grid_counts()

        def dump(node: Node) -> dict:
            if isinstance(node, SplitNode):
                return {
                    "type": "split",
                    "plane": node.plane.to_dict(),
                    "below": dump(node.below),
                    "above": dump(node.above),
                }
            record = {
                "type": "leaf",
                "id": node.id,
                "samples": len(node.samples),
                "grid_count": counts[node.id],
            }
            if node.report is not None:
                record["model"] = node.report.model.to_dict()
                record["r_squared"] = node.report.r_squared
                record["cv_error"] = node.report.cv_error
            return record

        return {"kind": self.kind, "space": self.space.to_dict(), "root": dump(self.root)}

    @classmethod
    def from_dict(cls, data: dict) -> "ObliqueTree":
        space = DeploymentSpace.from_dict(data["space"])
        next_id = 0

        def load(node: dict, region: Region) -> Node:
            nonlocal next_id
            if node["type"] == "split":
                plane = Hyperplane.from_dict(node["plane"])
                return SplitNode(
                    plane,
                    load(node["below"], region.with_constraint(plane, Side.BELOW)),
                    load(node["above"], region.with_constraint(plane, Side.ABOVE)),
                )
            next_id = max(next_id, node["id"] + 1)
            report = None
            if "model" in node:
                report = FitReport(LinearModel.from_dict(node["model"]), node["r_squared"], node["cv_error"])
            return Leaf(node["id"], (), region, report)

        root = load(data["root"], Region())
        return cls(space, root, next_id)


def variance_reduction_arrays(X: np.ndarray, y: np.ndarray, below: np.ndarray) -> float:
    n_below = int(below.sum())
    n_above = len(y) - n_below
    if n_below == 0 or n_above == 0:
        raise ValueError("Both sides of a split must hold samples.")
    children = (n_below * np.var(y[below]) + n_above * np.var(y[~below])) / len(y)
    return -(float(np.var(y)) - float(children))


def variance_reduction_score(left: Sequence[LabeledSample], right: Sequence[LabeledSample]) -> float:
    """Negated variance reduction (population variances), so lower is better."""
    if not left or not right:
        raise ValueError("Both sides of a split must hold samples.")
    X, y = samples_to_arrays(list(left) + list(right))
    return variance_reduction_arrays(X, y, np.arange(len(y)) < len(left))


def find_split(
    X: np.ndarray,
    y: np.ndarray,
    cfg: TreeConfig,
    sched: AnnealSchedule,
    rng: np.random.Generator,
) -> tuple[Hyperplane, float] | None:
    """
    Run the configured split search and apply the gain gate.

    Returns the plane and its gain, or None when the leaf should stay whole.
    """
    min_leaf = cfg.leaf_minimum(X.shape[1])
    if cfg.split_scorer == "regression":
        score_fn = regression_score
        baseline = -fit_r_squared(X, y)
    else:
        score_fn = variance_reduction_arrays
        baseline = 0.0

    if cfg.mode == "flat":
        found = best_axis_split(X, y, score_fn, min_leaf)
    else:
        found = sa_split_arrays(X, y, sched, rng, score_fn, min_leaf)
    if found is None:
        return None

    plane, score = found
    gain = baseline - score
    if cfg.split_scorer == "variance_reduction":
        # Relative reduction, so the gate shares the regression score's scale.
        parent = float(np.var(y))
        gain = gain / parent if parent > 0 else 0.0
    if gain < cfg.min_split_gain:
        return None
    return plane, gain


def _expand(
    tree: ObliqueTree,
    cfg: TreeConfig,
    sched: AnnealSchedule,
    seed: int,
    settled: frozenset[int] = frozenset(),
) -> tuple[ObliqueTree, set[int]]:
    min_leaf = cfg.leaf_minimum(tree.space.n)
    candidates = [
        leaf
        for leaf in tree.leaves()
        if len(leaf.samples) >= 2 * min_leaf and leaf.id not in settled
    ]

    def search(leaf: Leaf) -> tuple[Hyperplane, float] | None:
        X, y = samples_to_arrays(leaf.samples)
        return find_split(X, y, cfg, sched, derive_rng(seed, leaf.id, SPLIT_STREAM))

    if cfg.workers > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            found = list(pool.map(search, candidates))
    else:
        found = [search(leaf) for leaf in candidates]

    splits = {leaf.id: result for leaf, result in zip(candidates, found) if result is not None}
    unsplit = {leaf.id for leaf, result in zip(candidates, found) if result is None}
    next_id = tree.next_id

    def grow(node: Node) -> Node:
        nonlocal next_id
        if isinstance(node, SplitNode):
            return SplitNode(node.plane, grow(node.below), grow(node.above))
        if node.id not in splits:
            return node
        plane, gain = splits[node.id]
        X, _ = samples_to_arrays(node.samples)
        below = plane.below(X)
        below_leaf = Leaf(
            next_id,
            tuple(s for s, b in zip(node.samples, below) if b),
            node.region.with_constraint(plane, Side.BELOW),
        )
        above_leaf = Leaf(
            next_id + 1,
            tuple(s for s, b in zip(node.samples, below) if not b),
            node.region.with_constraint(plane, Side.ABOVE),
        )
        logger.debug(
            f"Leaf {node.id} split into {below_leaf.id}/{above_leaf.id} "
            f"({len(below_leaf.samples)}/{len(above_leaf.samples)} samples, gain {gain:.4f})"
        )
        next_id += 2
        return SplitNode(plane, below_leaf, above_leaf)

    grown = ObliqueTree(tree.space, grow(tree.root), next_id)
    return grown, unsplit


def expand_tree(
    tree: ObliqueTree,
    samples: Sequence[LabeledSample],
    cfg: TreeConfig,
    sched: AnnealSchedule,
    seed: int,
) -> ObliqueTree:
    """
    One expansion pass: every leaf holding at least 2 * min_leaf_samples
    samples is searched once and split when the gain gate allows it.
    """
    grown, _ = _expand(tree.with_samples(samples), cfg, sched, seed)
    return grown


def rebuild_from_scratch(
    space: DeploymentSpace,
    samples: Sequence[LabeledSample],
    cfg: TreeConfig,
    sched: AnnealSchedule,
    seed: int,
) -> ObliqueTree:
    """Grow a fresh tree from a single root leaf until no leaf splits."""
    if not samples:
        raise InsufficientDataError("Cannot build a tree from zero samples.")
    tree = ObliqueTree.single_leaf(space).with_samples(samples)
    settled: set[int] = set()
    while True:
        grown, unsplit = _expand(tree, cfg, sched, seed, frozenset(settled))
        settled |= unsplit
        if grown.next_id == tree.next_id:
            return grown
        tree = grown


def fit_leaf_models(tree: ObliqueTree, folds: int, seed: int) -> ObliqueTree:
    """
    Attach a FitReport to every leaf.

    Leaves with fewer than two samples get cv_error None (max uncertainty);
    an empty leaf borrows the pooled samples of its parent for its model.
    """

    def fit(node: Node, pooled: tuple[LabeledSample, ...]) -> Node:
        if isinstance(node, SplitNode):
            own = _subtree_samples(node)
            pool = own if own else pooled
            return SplitNode(node.plane, fit(node.below, pool), fit(node.above, pool))
        basis = node.samples or pooled
        if not basis:
            raise InsufficientDataError("Cannot fit leaf models on a tree without samples.")
        X, y = samples_to_arrays(basis)
        model = fit_arrays(X, y)
        error = None
        if len(node.samples) >= 2:
            error = cv_error_arrays(X, y, folds, derive_rng(seed, node.id, CV_STREAM))
        return replace(node, report=FitReport(model, r_squared_arrays(model, X, y), error))

    return replace(tree, root=fit(tree.root, _subtree_samples(tree.root)))


def _subtree_samples(node: Node) -> tuple[LabeledSample, ...]:
    if isinstance(node, Leaf):
        return node.samples
    return _subtree_samples(node.below) + _subtree_samples(node.above)


def weighted_r_squared(tree: ObliqueTree) -> float:
    """Sample-weighted mean leaf R² of a fitted tree."""
    total = 0
    acc = []
    for leaf in tree.leaves():
        if leaf.report is None:
            raise ValueError("fit_leaf_models first")
        total += len(leaf.samples)
        acc.append(len(leaf.samples) * leaf.report.r_squared)
    return math.fsum(acc) / total if total else 0.0
