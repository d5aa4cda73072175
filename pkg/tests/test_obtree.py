import numpy as np
import pytest

from deploytree.core import obtree
from deploytree.core.anneal import Hyperplane
from deploytree.core.linmodel import cv_error_arrays
from deploytree.core.obtree import (
    CV_STREAM,
    Leaf,
    ObliqueTree,
    SplitNode,
    expand_tree,
    fit_leaf_models,
    rebuild_from_scratch,
    variance_reduction_arrays,
    variance_reduction_score,
    weighted_r_squared,
)
from deploytree.core.space import LabeledSample, Region, Side, samples_to_arrays
from deploytree.deployers.synthetic import PlaneBump, SyntheticFunction
from deploytree.errors import PartitionError
from deploytree.utilities.config import TreeConfig
from deploytree.utilities.seeding import derive_rng


def _sample(space, deployer, k, seed):
    rng = np.random.default_rng(seed)
    X = space.grid[rng.choice(space.cardinality, k, replace=False)]
    return [LabeledSample(tuple(x), float(v)) for x, v in zip(X, deployer.evaluate_many(X))]


def test_linear_leaf_stays_whole(grid_20, plane, fast_sa):
    samples = _sample(grid_20, plane, 40, 0)
    tree = expand_tree(ObliqueTree.single_leaf(grid_20), samples, TreeConfig(), fast_sa, 0)
    assert tree.n_leaves == 1
    assert rebuild_from_scratch(grid_20, samples, TreeConfig(), fast_sa, 0).n_leaves == 1


def test_bump_root_splits_and_bump_child_fits_worse(grid_50, fast_sa):
    bump = PlaneBump((0.8, 0.2), (25.0, 25.0), 3.0, 20.0)
    coarse = [(x1, x2) for x1 in (0, 12, 24, 36, 48) for x2 in (0, 12, 24, 36, 48)]
    near = [(25, 25), (22, 25), (28, 25), (25, 22), (25, 28)]
    X = np.asarray(coarse + near, dtype=float)
    samples = [LabeledSample(tuple(x), float(v)) for x, v in zip(X, bump.evaluate_many(X))]

    tree = expand_tree(ObliqueTree.single_leaf(grid_50), samples, TreeConfig(), fast_sa, 3)
    assert isinstance(tree.root, SplitNode)
    fitted = fit_leaf_models(tree, 10, 3)
    bump_leaf = fitted.leaf_for((25.0, 25.0))
    other = next(leaf for leaf in fitted.leaves() if leaf.id != bump_leaf.id)
    assert bump_leaf.report.r_squared < other.report.r_squared


def test_only_large_enough_leaves_are_searched(grid_20, fast_sa, monkeypatch):
    cut = Hyperplane.axis(2, 0, 9.5)
    root = SplitNode(
        cut,
        Leaf(1, (), Region().with_constraint(cut, Side.BELOW)),
        Leaf(2, (), Region().with_constraint(cut, Side.ABOVE)),
    )
    tree = ObliqueTree(grid_20, root, 3)
    hat = SyntheticFunction("HAT", (0.3, 0.2))
    below = [LabeledSample((x1, x2), hat.evaluate((x1, x2))) for x1 in range(3) for x2 in range(4)]
    above = [LabeledSample((15.0, x2), hat.evaluate((15.0, x2))) for x2 in range(3)]

    searched = []
    real = obtree.find_split

    def spy(X, y, cfg, sched, rng):
        searched.append(len(y))
        return real(X, y, cfg, sched, rng)

    monkeypatch.setattr(obtree, "find_split", spy)
    grown = expand_tree(tree, below + above, TreeConfig(), fast_sa, 0)
    assert searched == [12]
    assert 2 in {leaf.id for leaf in grown.leaves()}


def test_variance_reduction_examples(rng):
    X = np.zeros((4, 1))
    assert variance_reduction_arrays(X, np.full(4, 3.0), np.array([True, True, False, False])) == 0.0
    left = [LabeledSample((0,), 0.0), LabeledSample((1,), 0.0)]
    right = [LabeledSample((2,), 10.0), LabeledSample((3,), 10.0)]
    assert variance_reduction_score(left, right) == pytest.approx(-25.0)

    y = rng.normal(size=50)
    mask = rng.random(50) < 0.4

    def two_pass(v):
        mean = sum(v) / len(v)
        return sum((x - mean) ** 2 for x in v) / len(v)

    expected = -(two_pass(y) - (mask.sum() * two_pass(y[mask]) + (~mask).sum() * two_pass(y[~mask])) / 50)
    assert variance_reduction_arrays(np.zeros((50, 1)), y, mask) == pytest.approx(expected, abs=1e-12)


def test_predict_single_leaf(small_space, plane):
    samples = [LabeledSample(p, plane.evaluate(p)) for p in small_space.enumerate_grid()]
    tree = fit_leaf_models(ObliqueTree.single_leaf(small_space, samples), 5, 0)
    assert tree.predict((1.0, 1.0)) == pytest.approx(1.0)


def test_tree_on_linear_samples_is_exact(grid_50, plane, fast_sa):
    samples = _sample(grid_50, plane, 100, 1)
    tree = fit_leaf_models(rebuild_from_scratch(grid_50, samples, TreeConfig(), fast_sa, 1), 10, 1)
    np.testing.assert_allclose(tree.predict_many(grid_50.grid), plane.evaluate_many(grid_50.grid), atol=1e-9)


def test_leaf_errors(small_space, plane):
    one = fit_leaf_models(ObliqueTree.single_leaf(small_space, [LabeledSample((0, 0), 1.0)]), 10, 0)
    assert one.leaves()[0].report.cv_error is None

    exact = [LabeledSample(p, plane.evaluate(p)) for p in list(small_space.enumerate_grid())[:12]]
    fitted = fit_leaf_models(ObliqueTree.single_leaf(small_space, exact), 10, 0)
    assert fitted.leaves()[0].report.cv_error == pytest.approx(0.0, abs=1e-20)


def test_leaf_cv_matches_direct_call(grid_50):
    f = SyntheticFunction.from_seed("EXPABS", grid_50, 2)
    samples = _sample(grid_50, f, 40, 4)
    tree = fit_leaf_models(ObliqueTree.single_leaf(grid_50, samples), 10, 17)
    X, y = samples_to_arrays(samples)
    assert tree.leaves()[0].report.cv_error == cv_error_arrays(X, y, 10, derive_rng(17, 0, CV_STREAM))


def test_empty_leaf_borrows_parent_samples(grid_20, plane):
    cut = Hyperplane.axis(2, 0, 9.5)
    root = SplitNode(
        cut,
        Leaf(1, (), Region().with_constraint(cut, Side.BELOW)),
        Leaf(2, (), Region().with_constraint(cut, Side.ABOVE)),
    )
    samples = [LabeledSample((x, y), plane.evaluate((x, y))) for x in range(5) for y in range(3)]
    tree = fit_leaf_models(ObliqueTree(grid_20, root, 3).with_samples(samples), 5, 0)
    empty = tree.leaf_for((15.0, 1.0))
    assert empty.samples == ()
    assert empty.report.cv_error is None
    assert tree.predict((15.0, 1.0)) == pytest.approx(plane.evaluate((15.0, 1.0)))


def test_rebuild_is_deterministic_and_partitions(grid_20, fast_sa):
    hat = SyntheticFunction.from_seed("HAT", grid_20, 5)
    samples = _sample(grid_20, hat, 80, 5)
    a = rebuild_from_scratch(grid_20, samples, TreeConfig(), fast_sa, 9)
    b = rebuild_from_scratch(grid_20, samples, TreeConfig(), fast_sa, 9)
    assert a.to_dict() == b.to_dict()

    ids = a.route(grid_20.grid)
    for leaf in a.leaves():
        np.testing.assert_array_equal(leaf.region.mask(grid_20.grid), ids == leaf.id)
    assert sum(a.grid_counts().values()) == grid_20.cardinality
    assert sum(len(leaf.samples) for leaf in a.leaves()) == 80


def test_flat_mode_uses_axis_cuts(grid_20, fast_sa):
    hat = SyntheticFunction.from_seed("HAT", grid_20, 6)
    samples = _sample(grid_20, hat, 80, 6)
    tree = rebuild_from_scratch(grid_20, samples, TreeConfig(mode="flat"), fast_sa, 0)
    assert all(node.plane.nonzero == 1 for node in tree.split_nodes())


def test_variance_scorer_builds_a_tree(grid_20, fast_sa):
    hat = SyntheticFunction.from_seed("HAT", grid_20, 6)
    samples = _sample(grid_20, hat, 80, 6)
    tree = rebuild_from_scratch(grid_20, samples, TreeConfig(split_scorer="variance_reduction"), fast_sa, 0)
    assert sum(len(leaf.samples) for leaf in tree.leaves()) == 80


def test_online_expansion_never_loses_leaves(grid_20, fast_sa):
    hat = SyntheticFunction.from_seed("HAT", grid_20, 8)
    samples = _sample(grid_20, hat, 120, 8)
    tree = ObliqueTree.single_leaf(grid_20)
    counts = []
    for i, n in enumerate((30, 60, 90, 120)):
        tree = expand_tree(tree, samples[:n], TreeConfig(), fast_sa, i)
        counts.append(tree.n_leaves)
    assert counts == sorted(counts)


def test_off_grid_sample_rejected(small_space):
    with pytest.raises(PartitionError):
        ObliqueTree.single_leaf(small_space).with_samples([LabeledSample((0.5, 0.0), 1.0)])


def test_dump_round_trip(grid_20, fast_sa):
    hat = SyntheticFunction.from_seed("HAT", grid_20, 5)
    samples = _sample(grid_20, hat, 80, 5)
    tree = fit_leaf_models(rebuild_from_scratch(grid_20, samples, TreeConfig(), fast_sa, 2), 10, 2)
    restored = ObliqueTree.from_dict(tree.to_dict())
    assert restored.n_leaves == tree.n_leaves
    np.testing.assert_allclose(restored.predict_many(grid_20.grid), tree.predict_many(grid_20.grid), atol=1e-9)
    assert 0.0 <= weighted_r_squared(tree) <= 1.0


def test_dump_keeps_boundary_points_on_their_side(grid_20):
    cut = Hyperplane((3.0, 3.0), -27.0)
    root = SplitNode(
        cut,
        Leaf(1, (), Region().with_constraint(cut, Side.BELOW)),
        Leaf(2, (), Region().with_constraint(cut, Side.ABOVE)),
    )
    tree = ObliqueTree(grid_20, root, 3)
    data = tree.to_dict()
    assert data["root"]["plane"] == {"coeffs": [3.0, 3.0], "offset": -27.0}
    restored = ObliqueTree.from_dict(data)
    np.testing.assert_array_equal(restored.route(grid_20.grid), tree.route(grid_20.grid))
    assert restored.leaf_for((4.0, 5.0)).id == 1
