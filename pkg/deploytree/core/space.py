from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping, Sequence

import numpy as np

from deploytree.errors import SpaceError
from deploytree.utilities.constants import MAX_ENUMERATION

if TYPE_CHECKING:
    from deploytree.core.anneal import Hyperplane

Point = tuple[float, ...]


@dataclass(frozen=True)
class Dimension:
    """A named configuration axis with a finite, strictly increasing set of levels."""

    name: str
    levels: tuple[float, ...]

    def __post_init__(self):
        levels = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "levels", levels)
        if not self.name:
            raise SpaceError("Dimension name must not be empty.")
        if not levels:
            raise SpaceError(f"Dimension {self.name} has no levels.")
        if not all(math.isfinite(v) for v in levels):
            raise SpaceError(f"Dimension {self.name} has non-finite levels.")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise SpaceError(f"Levels of {self.name} must be strictly increasing.")

    def __len__(self) -> int:
        return len(self.levels)

    @cached_property
    def _positions(self) -> dict[float, int]:
        return {v: i for i, v in enumerate(self.levels)}

    def index_of(self, value: float) -> int:
        try:
            return self._positions[float(value)]
        except KeyError:
            raise SpaceError(f"{value} is not a level of {self.name}") from None


@dataclass(frozen=True)
class DeploymentSpace:
    """
    The finite Cartesian grid of configuration combinations.

    Categorical dimensions are stored as ordinal codes 0..k-1; `categorical`
    keeps the labels so outputs can be decoded.
    """

    dims: tuple[Dimension, ...]
    categorical: Mapping[str, tuple[str, ...]] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        if not self.dims:
            raise SpaceError("A deployment space needs at least one dimension.")
        names = [d.name for d in self.dims]
        if len(set(names)) != len(names):
            raise SpaceError(f"Dimension names must be unique: {names}")
        for name, labels in self.categorical.items():
            if name not in names:
                raise SpaceError(f"Categorical labels given for unknown dimension {name}")
            if len(labels) != len(self.dims[names.index(name)]):
                raise SpaceError(f"Dimension {name} has {len(labels)} labels but a different level count")

    def __hash__(self) -> int:
        return hash(self.dims)

    @classmethod
    def from_levels(cls, levels: Mapping[str, Iterable[float]]) -> "DeploymentSpace":
        return cls(tuple(Dimension(name, tuple(values)) for name, values in levels.items()))

    @classmethod
    def from_dict(cls, data: dict) -> "DeploymentSpace":
        """
        Build a space from the definition file layout.

        Categorical dimensions may list their labels under "categorical" and
        omit "levels"; they are encoded as ordinals 0..k-1.
        """
        categorical = {k: tuple(v) for k, v in data.get("categorical", {}).items()}
        dims = []
        try:
            for entry in data["dimensions"]:
                name = entry["name"]
                levels = entry.get("levels")
                if levels is None and name in categorical:
                    levels = range(len(categorical[name]))
                if levels is None:
                    raise SpaceError(f"Dimension {name} has no levels.")
                dims.append(Dimension(name, tuple(levels)))
        except (KeyError, TypeError) as e:
            raise SpaceError(f"Malformed space definition: {e}") from e
        return cls(tuple(dims), categorical)

    @classmethod
    def from_json(cls, path: str | Path) -> "DeploymentSpace":
        try:
            with open(path, "r") as file:
                return cls.from_dict(json.load(file))
        except (OSError, json.JSONDecodeError) as e:
            raise SpaceError(f"Unable to read space definition {path}: {e}") from e

    def to_dict(self) -> dict:
        return {
            "dimensions": [{"name": d.name, "levels": list(d.levels)} for d in self.dims],
            "categorical": {k: list(v) for k, v in self.categorical.items()},
        }

    def to_json(self, path: str | Path) -> None:
        with open(path, "w") as file:
            json.dump(self.to_dict(), file, indent=4)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.dims)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(d) for d in self.dims)

    @property
    def cardinality(self) -> int:
        # Python ints, so 7-dim spaces cannot overflow.
        return math.prod(self.shape)

    @property
    def enumerable(self) -> bool:
        return self.cardinality <= MAX_ENUMERATION

    def decode(self, name: str, value: float) -> str | float:
        labels = self.categorical.get(name)
        if labels is None:
            return value
        return labels[int(value)]

    def encode(self, name: str, label: str) -> float:
        labels = self.categorical.get(name)
        if labels is None or label not in labels:
            raise SpaceError(f"{label!r} is not a category of {name}")
        return float(labels.index(label))

    def enumerate_grid(self) -> Iterator[Point]:
        return itertools.product(*(d.levels for d in self.dims))

    def iter_grid_chunks(self, chunk: int = 100_000) -> Iterator[np.ndarray]:
        stream = self.enumerate_grid()
        while True:
            block = list(itertools.islice(stream, chunk))
            if not block:
                return
            yield np.asarray(block, dtype=float).reshape(len(block), self.n)

    @cached_property
    def grid(self) -> np.ndarray:
        """Every grid point, one row each, in enumeration order."""
        if not self.enumerable:
            raise SpaceError(
                f"|D| = {self.cardinality} exceeds the enumeration bound {MAX_ENUMERATION}"
            )
        axes = np.meshgrid(*(np.asarray(d.levels) for d in self.dims), indexing="ij")
        grid = np.stack([a.reshape(-1) for a in axes], axis=1)
        grid.flags.writeable = False
        return grid

    def validate_point(self, point: Sequence[float]) -> Point:
        if len(point) != self.n:
            raise SpaceError(f"Point {tuple(point)} has {len(point)} coordinates, space has {self.n}")
        for d, v in zip(self.dims, point):
            d.index_of(v)
        return tuple(float(v) for v in point)

    def contains(self, point: Sequence[float]) -> bool:
        try:
            self.validate_point(point)
        except SpaceError:
            return False
        return True

    def index_of(self, point: Sequence[float]) -> int:
        """Flat enumeration index of a grid point."""
        self.validate_point(point)
        index = 0
        for d, v in zip(self.dims, point):
            index = index * len(d) + d.index_of(v)
        return index

    def indices_of(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        index = np.zeros(len(points), dtype=np.int64)
        for j, d in enumerate(self.dims):
            levels = np.asarray(d.levels)
            pos = np.searchsorted(levels, points[:, j])
            pos = np.clip(pos, 0, len(levels) - 1)
            if not np.array_equal(levels[pos], points[:, j]):
                raise SpaceError(f"Points off the grid of {d.name}")
            index = index * len(d) + pos
        return index

    def point_at(self, index: int) -> Point:
        if not 0 <= index < self.cardinality:
            raise SpaceError(f"Index {index} outside a grid of {self.cardinality} points")
        coords = []
        for d in reversed(self.dims):
            index, pos = divmod(index, len(d))
            coords.append(d.levels[pos])
        return tuple(reversed(coords))

    def uniform_indices(
        self, k: int, rng: np.random.Generator, exclude: Iterable[int] = ()
    ) -> list[int]:
        """k distinct grid indices, uniform without replacement, avoiding `exclude`."""
        excluded = set(exclude)
        available = self.cardinality - len(excluded)
        if k > available:
            raise SpaceError(f"Requested {k} points but only {available} remain unsampled")
        if k == 0:
            return []
        if self.enumerable:
            candidates = np.setdiff1d(
                np.arange(self.cardinality, dtype=np.int64),
                np.fromiter(excluded, dtype=np.int64, count=len(excluded)),
                assume_unique=True,
            )
            return [int(i) for i in rng.choice(candidates, size=k, replace=False)]
        chosen: list[int] = []
        seen = set(excluded)
        while len(chosen) < k:
            i = int(rng.integers(self.cardinality))
            if i not in seen:
                seen.add(i)
                chosen.append(i)
        return chosen


@dataclass(frozen=True)
class LabeledSample:
    input: Point
    output: float

    def __post_init__(self):
        object.__setattr__(self, "input", tuple(float(v) for v in self.input))
        object.__setattr__(self, "output", float(self.output))
        if not math.isfinite(self.output):
            raise SpaceError(f"Non-finite performance value at {self.input}")


def samples_to_arrays(samples: Sequence[LabeledSample]) -> tuple[np.ndarray, np.ndarray]:
    if not samples:
        return np.empty((0, 0)), np.empty(0)
    X = np.asarray([s.input for s in samples], dtype=float)
    y = np.asarray([s.output for s in samples], dtype=float)
    return X, y


class Side(str, Enum):
    BELOW = "below"
    ABOVE = "above"


@dataclass(frozen=True)
class Region:
    """Conjunction of hyperplane half-spaces collected along a root-to-leaf path."""

    constraints: tuple[tuple["Hyperplane", Side], ...] = ()

    def with_constraint(self, plane: "Hyperplane", side: Side) -> "Region":
        return Region(self.constraints + ((plane, side),))

    def mask(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        inside = np.ones(len(X), dtype=bool)
        for plane, side in self.constraints:
            if len(plane.coeffs) != X.shape[1]:
                raise SpaceError(
                    f"Hyperplane has {len(plane.coeffs)} coefficients, points have {X.shape[1]}"
                )
            values = plane.evaluate(X)
            # Points exactly on a plane belong to the below-or-on side.
            inside &= values <= 0 if side is Side.BELOW else values > 0
        return inside

    def contains(self, point: Sequence[float]) -> bool:
        return bool(self.mask(np.asarray(point, dtype=float)[None, :])[0])


def enumerate_grid(space: DeploymentSpace) -> Iterator[Point]:
    return space.enumerate_grid()


def region_membership(region: Region, point: Sequence[float]) -> bool:
    return region.contains(point)


def region_grid_count(space: DeploymentSpace, region: Region) -> int:
    if space.enumerable:
        return int(region.mask(space.grid).sum())
    return sum(int(region.mask(block).sum()) for block in space.iter_grid_chunks())
