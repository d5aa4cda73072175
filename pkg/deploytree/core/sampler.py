from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Collection, Sequence

import numpy as np
from scipy.optimize import linprog

from deploytree.core.obtree import ObliqueTree
from deploytree.core.space import DeploymentSpace, Point, Region, Side
from deploytree.errors import ConfigError, SpaceError
from deploytree.utilities.config import CostConfig, Weights
from deploytree.utilities.constants import MAX_ENUMERATION

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LeafScore:
    leaf_id: int
    error: float
    size: int
    cost: float
    score: float
    allocation: int = 0


class CostModel:
    """
    Monetary cost of deploying a point, built from named dimensions.

    Kinds: "product" (e.g. nodes x cores), "sum" (e.g. MongoS + MongoD) and
    "single" (one dimension as-is).
    """

    def __init__(self, kind: str, dims: Sequence[str], space: DeploymentSpace):
        if kind not in ("product", "sum", "single"):
            raise ConfigError(f"Unknown cost model kind: {kind}")
        unknown = [d for d in dims if d not in space.names]
        if unknown:
            raise ConfigError(f"Cost model references unknown dimensions: {unknown}")
        if kind == "single" and len(dims) != 1:
            raise ConfigError("A single-dimension cost model takes exactly one dimension.")
        self.kind = kind
        self.dims = tuple(dims)
        self._columns = [space.names.index(d) for d in dims]

    @classmethod
    def from_config(cls, cfg: CostConfig, space: DeploymentSpace) -> "CostModel":
        return cls(cfg.kind, cfg.dims, space)

    def cost_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        columns = X[:, self._columns]
        if self.kind == "product":
            costs = np.prod(columns, axis=1)
        else:
            costs = np.sum(columns, axis=1)
        if not np.all(np.isfinite(costs)) or np.any(costs < 0):
            raise ConfigError(f"Cost model {self.kind}{self.dims} yields negative or non-finite costs")
        return costs

    def cost(self, point: Sequence[float]) -> float:
        return float(self.cost_many(np.asarray(point, dtype=float)[None, :])[0])


def _unsampled_tallies(
    tree: ObliqueTree, sampled: Collection[int], cost_model: CostModel | None
) -> tuple[dict[int, int], dict[int, float]]:
    """Unsampled grid points per leaf, and the summed cost of those points."""
    space = tree.space
    sizes = {leaf.id: 0 for leaf in tree.leaves()}
    cost_sums = {leaf.id: 0.0 for leaf in tree.leaves()}

    def tally(X: np.ndarray, weight: int) -> None:
        ids = tree.route(X)
        costs = cost_model.cost_many(X) if cost_model is not None else np.zeros(len(X))
        for leaf_id in sizes:
            rows = ids == leaf_id
            sizes[leaf_id] += weight * int(rows.sum())
            cost_sums[leaf_id] += weight * math.fsum(costs[rows])

    if space.enumerable:
        keep = np.ones(space.cardinality, dtype=bool)
        keep[np.fromiter(sampled, dtype=np.int64, count=len(sampled))] = False
        tally(space.grid[keep], 1)
    else:
        for block in space.iter_grid_chunks():
            tally(block, 1)
        if sampled:
            tally(np.asarray([space.point_at(i) for i in sampled]), -1)
    return sizes, cost_sums


def score_leaves(
    tree: ObliqueTree,
    weights: Weights,
    sampled: Collection[int] = (),
    cost_model: CostModel | None = None,
) -> list[LeafScore]:
    """
    Normalized error/size(/cost) score per leaf.

    `sampled` holds flat grid indices already deployed; leaf sizes count only
    the remaining points. Leaves too small to cross-validate take the largest
    measured error, or 1 when no leaf could be cross-validated yet.
    """
    leaves = tree.leaves()
    if any(leaf.report is None for leaf in leaves):
        raise ValueError("score_leaves needs fitted leaves; run fit_leaf_models first.")
    measured = [leaf.report.cv_error for leaf in leaves if leaf.report.cv_error is not None]
    ceiling = max(measured, default=1.0)
    errors = {
        leaf.id: ceiling if leaf.report.uncertain else leaf.report.cv_error
        for leaf in leaves
    }
    sizes, cost_sums = _unsampled_tallies(tree, sampled, cost_model)
    costs = {
        leaf_id: cost_sums[leaf_id] / sizes[leaf_id] if sizes[leaf_id] else 0.0
        for leaf_id in sizes
    }

    max_error = max(errors.values()) or 1.0
    max_size = max(sizes.values()) or 1
    max_cost = max(costs.values()) or 1.0

    scores = []
    for leaf in leaves:
        score = weights.w_error * errors[leaf.id] / max_error + weights.w_size * sizes[leaf.id] / max_size
        if cost_model is not None:
            score -= weights.w_cost * costs[leaf.id] / max_cost
        scores.append(
            LeafScore(leaf.id, errors[leaf.id], sizes[leaf.id], costs[leaf.id], max(0.0, score))
        )
    return scores


def allocate(scores: Sequence[LeafScore], b: int) -> list[LeafScore]:
    """
    Share b deployments among leaves in proportion to their scores.

    Each leaf asks for ceil(score / sum * b) in descending-score order under a
    running cap, so the total is exactly min(b, unsampled points). Leaves are
    capped at their own unsampled count and the surplus is re-offered in the
    same order. With all scores zero the budget is dealt round-robin.
    """
    if b <= 0:
        raise ValueError(f"Batch size must be positive, got {b}")
    order = sorted(range(len(scores)), key=lambda i: (-scores[i].score, scores[i].leaf_id))
    remaining = min(b, sum(s.size for s in scores))
    given = [0] * len(scores)
    total = math.fsum(s.score for s in scores)

    if total > 0:
        for i in order:
            # Small slack so 5.0000000001 does not round up to 6.
            ask = math.ceil(scores[i].score / total * b - 1e-9)
            give = min(ask, remaining, scores[i].size)
            given[i] = give
            remaining -= give
        for i in order:
            if remaining == 0:
                break
            extra = min(scores[i].size - given[i], remaining)
            given[i] += extra
            remaining -= extra
    else:
        while remaining > 0:
            for i in order:
                if remaining == 0:
                    break
                if given[i] < scores[i].size:
                    given[i] += 1
                    remaining -= 1

    return [replace(s, allocation=g) for s, g in zip(scores, given)]


def draw(
    space: DeploymentSpace,
    region: Region,
    k: int,
    already_sampled: Collection[int],
    rng: np.random.Generator,
) -> list[Point]:
    """k distinct unsampled grid points of `region`, uniform without replacement."""
    if k == 0:
        return []
    if not space.enumerable:
        return _draw_by_rejection(space, region, k, already_sampled, rng)
    candidates = np.flatnonzero(region.mask(space.grid))
    if already_sampled:
        taken = np.fromiter(already_sampled, dtype=np.int64, count=len(already_sampled))
        candidates = candidates[~np.isin(candidates, taken)]
    if k > len(candidates):
        raise SpaceError(f"Asked for {k} points but the region has {len(candidates)} unsampled")
    picked = rng.choice(candidates, size=k, replace=False)
    return [tuple(float(v) for v in space.grid[i]) for i in picked]


def _draw_by_rejection(
    space: DeploymentSpace,
    region: Region,
    k: int,
    already_sampled: Collection[int],
    rng: np.random.Generator,
    max_tries: int = 1_000_000,
) -> list[Point]:
    seen = set(already_sampled)
    picked: list[Point] = []
    for _ in range(max_tries):
        index = int(rng.integers(space.cardinality))
        if index in seen:
            continue
        point = space.point_at(index)
        if region.contains(point):
            seen.add(index)
            picked.append(point)
            if len(picked) == k:
                return picked
    logger.debug(f"Rejection found {len(picked)} of {k} points; enumerating the region's bounding box")
    return _draw_from_bounding_box(space, region, k, already_sampled, rng)


def region_bounding_levels(space: DeploymentSpace, region: Region) -> list[np.ndarray]:
    """
    Grid levels of each dimension that can hold a point of `region`.

    Bounds come from the region's half-spaces relaxed to closed, continuous
    constraints over the grid's box. Empty lists mean the region is empty.
    """
    lower = [d.levels[0] for d in space.dims]
    upper = [d.levels[-1] for d in space.dims]
    levels = [np.asarray(d.levels) for d in space.dims]
    if not region.constraints:
        return levels
    rows, limits = [], []
    for plane, side in region.constraints:
        sign = 1.0 if side is Side.BELOW else -1.0
        rows.append(sign * np.asarray(plane.coeffs))
        limits.append(-sign * plane.offset)
    A, b = np.asarray(rows), np.asarray(limits)
    box = list(zip(lower, upper))
    kept = []
    for j in range(space.n):
        objective = np.zeros(space.n)
        objective[j] = 1.0
        low = linprog(objective, A_ub=A, b_ub=b, bounds=box, method="highs")
        high = linprog(-objective, A_ub=A, b_ub=b, bounds=box, method="highs")
        if low.status == 2 or high.status == 2:
            return [np.empty(0) for _ in space.dims]
        lo = (low.x[j] if low.success else lower[j]) - 1e-9
        hi = (high.x[j] if high.success else upper[j]) + 1e-9
        kept.append(levels[j][(levels[j] >= lo) & (levels[j] <= hi)])
    return kept


def _draw_from_bounding_box(
    space: DeploymentSpace,
    region: Region,
    k: int,
    already_sampled: Collection[int],
    rng: np.random.Generator,
) -> list[Point]:
    levels = region_bounding_levels(space, region)
    size = math.prod(len(axis) for axis in levels)
    if size > MAX_ENUMERATION:
        raise SpaceError(
            f"Region's bounding box holds {size} points, over the enumeration bound {MAX_ENUMERATION}"
        )
    if size == 0:
        raise SpaceError(f"Asked for {k} points but the region is empty")
    axes = np.meshgrid(*levels, indexing="ij")
    box = np.stack([a.reshape(-1) for a in axes], axis=1)
    candidates = box[region.mask(box)]
    if already_sampled and len(candidates):
        taken = np.fromiter(already_sampled, dtype=np.int64, count=len(already_sampled))
        candidates = candidates[~np.isin(space.indices_of(candidates), taken)]
    if k > len(candidates):
        raise SpaceError(f"Asked for {k} points but the region has {len(candidates)} unsampled")
    picked = rng.choice(len(candidates), size=k, replace=False)
    return [tuple(float(v) for v in candidates[i]) for i in picked]
