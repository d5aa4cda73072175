import itertools

import numpy as np
import pytest

from deploytree.core.anneal import Hyperplane
from deploytree.core.space import (
    DeploymentSpace,
    Dimension,
    LabeledSample,
    Region,
    Side,
    enumerate_grid,
    region_grid_count,
    region_membership,
)
from deploytree.errors import SpaceError


def test_enumerate_two_by_one():
    space = DeploymentSpace.from_levels({"a": [1, 2], "b": [10]})
    assert list(enumerate_grid(space)) == [(1.0, 10.0), (2.0, 10.0)]


def test_enumerate_distinct_points():
    space = DeploymentSpace.from_levels({"a": [0, 1], "b": [0, 1]})
    points = list(enumerate_grid(space))
    assert len(points) == 4
    assert len(set(points)) == 4


def test_cardinality_is_product_of_levels():
    space = DeploymentSpace.from_levels({"k": range(5), "points": range(500)})
    assert space.cardinality == 2500
    assert sum(1 for _ in space.enumerate_grid()) == 2500


def test_grid_matches_enumeration_order(small_space):
    assert [tuple(row) for row in small_space.grid] == list(small_space.enumerate_grid())


@pytest.mark.parametrize(
    "levels",
    [[], [1, 1], [2, 1], [0, float("nan")]],
)
def test_invalid_levels_rejected(levels):
    with pytest.raises(SpaceError):
        Dimension("x", tuple(levels))


def test_duplicate_names_rejected():
    with pytest.raises(SpaceError):
        DeploymentSpace((Dimension("x", (0, 1)), Dimension("x", (0, 1))))


def test_index_round_trip(small_space):
    for i in range(small_space.cardinality):
        assert small_space.index_of(small_space.point_at(i)) == i
    np.testing.assert_array_equal(small_space.indices_of(small_space.grid), np.arange(25))


def test_off_grid_point(small_space):
    assert not small_space.contains((0.5, 1))
    with pytest.raises(SpaceError):
        small_space.index_of((0.5, 1))
    with pytest.raises(SpaceError):
        small_space.index_of((1,))


def test_uniform_indices_respects_exclusion(small_space, rng):
    picked = small_space.uniform_indices(20, rng, exclude=range(5))
    assert len(set(picked)) == 20
    assert not set(picked) & set(range(5))
    with pytest.raises(SpaceError):
        small_space.uniform_indices(21, rng, exclude=range(5))


def test_categorical_round_trip(tmp_path):
    data = {
        "dimensions": [{"name": "engine"}, {"name": "threads", "levels": [1, 2, 4]}],
        "categorical": {"engine": ["mmap", "wiredtiger"]},
    }
    space = DeploymentSpace.from_dict(data)
    assert space.shape == (2, 3)
    assert space.encode("engine", "wiredtiger") == 1.0
    assert space.decode("engine", 0.0) == "mmap"
    space.to_json(tmp_path / "space.json")
    assert DeploymentSpace.from_json(tmp_path / "space.json") == space


def test_malformed_definition():
    with pytest.raises(SpaceError):
        DeploymentSpace.from_dict({"dimensions": [{"levels": [1]}]})


def test_labeled_sample_must_be_finite():
    with pytest.raises(SpaceError):
        LabeledSample((0.0,), float("inf"))


def test_root_region_contains_everything(small_space):
    assert all(region_membership(Region(), p) for p in small_space.enumerate_grid())


def test_on_boundary_point_is_below():
    region = Region().with_constraint(Hyperplane.axis(2, 0, 3.0), Side.BELOW)
    assert region.contains((3.0, 7.0))
    assert not Region().with_constraint(Hyperplane.axis(2, 0, 3.0), Side.ABOVE).contains((3.0, 7.0))


def test_region_mask_agrees_with_sign_oracle(grid_20, rng):
    region = Region()
    for _ in range(3):
        plane = Hyperplane(tuple(rng.normal(size=2)), float(rng.normal() * 5))
        region = region.with_constraint(plane, Side.BELOW if rng.random() < 0.5 else Side.ABOVE)
    for p in grid_20.enumerate_grid():
        expected = all(
            (sum(a * x for a, x in zip(plane.coeffs, p)) + plane.offset <= 0) == (side is Side.BELOW)
            for plane, side in region.constraints
        )
        assert region.contains(p) == expected


def test_region_dimension_mismatch():
    region = Region().with_constraint(Hyperplane((1.0, 1.0, 1.0), 0.0), Side.BELOW)
    with pytest.raises(SpaceError):
        region.mask(np.zeros((2, 2)))


def test_region_grid_counts(grid_50, grid_20, rng):
    assert region_grid_count(grid_50, Region()) == 2500
    # Levels 0..49: x1 <= 24.5 holds exactly half.
    half = Region().with_constraint(Hyperplane.axis(2, 0, 24.5), Side.BELOW)
    assert region_grid_count(grid_50, half) == 1250
    oblique = Region().with_constraint(Hyperplane((0.3, -0.7), 2.1), Side.ABOVE)
    brute = sum(1 for x, y in itertools.product(range(20), repeat=2) if 0.3 * x - 0.7 * y + 2.1 > 0)
    assert region_grid_count(grid_20, oblique) == brute
