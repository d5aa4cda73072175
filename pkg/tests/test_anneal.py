import math

import numpy as np
import pytest

from deploytree.core.anneal import (
    Hyperplane,
    accept,
    best_axis_split,
    perturb,
    regression_score,
    sa_split,
    split_score,
)
from deploytree.core.linmodel import fit_ols, r_squared
from deploytree.core.space import LabeledSample
from deploytree.deployers.synthetic import SyntheticFunction
from deploytree.utilities.config import AnnealSchedule


def _two_pieces():
    samples = []
    for x1 in range(10):
        for x2 in range(3):
            y = x1 if x1 < 5 else x1 + 10
            samples.append(LabeledSample((x1, x2), float(y)))
    return samples


def test_hyperplane_validation():
    with pytest.raises(ValueError):
        Hyperplane((0.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        Hyperplane((float("nan"), 1.0), 0.0)


def test_normalized_plane_keeps_partition(rng):
    plane = Hyperplane((-3.0, 4.0), 2.0)
    unit = plane.normalized()
    assert math.isclose(math.hypot(*unit.coeffs), 1.0)
    assert unit.coeffs[0] > 0
    X = rng.uniform(-5, 5, size=(200, 2))
    np.testing.assert_array_equal(plane.below(X), ~unit.below(X) | (plane.evaluate(X) == 0))


def test_round_trip_through_dict():
    plane = Hyperplane((0.25, -1.5), 3.0)
    assert Hyperplane.from_dict(plane.to_dict()) == plane


def test_split_score_perfect_sides():
    left = [LabeledSample((x,), 2 * x) for x in range(3)]
    right = [LabeledSample((x,), 5.0) for x in range(5, 7)]
    assert split_score(left, right) == -1.0
    assert split_score(left, right[:1]) == -1.0


def test_split_score_matches_formula(rng):
    gauss = SyntheticFunction("GAUSS", (0.5, 0.7))
    X = rng.uniform(-2, 2, size=(50, 2))
    samples = [LabeledSample(tuple(x), float(v)) for x, v in zip(X, gauss.evaluate_many(X))]
    mask = rng.random(50) < 0.5
    left = [s for s, m in zip(samples, mask) if m]
    right = [s for s, m in zip(samples, mask) if not m]
    expected = -(len(left) * r_squared(fit_ols(left), left) + len(right) * r_squared(fit_ols(right), right)) / 50
    assert split_score(left, right) == pytest.approx(expected, abs=1e-12)
    assert -1.0 <= expected <= 0.0


def test_split_score_needs_both_sides():
    with pytest.raises(ValueError):
        split_score([], [LabeledSample((0,), 1.0)])


def test_perturb_is_seeded_and_shrinks():
    plane = Hyperplane((1.0, 1.0), 0.0)
    a = perturb(plane, 0.5, (1.0, 1.0), np.random.default_rng(3))
    b = perturb(plane, 0.5, (1.0, 1.0), np.random.default_rng(3))
    assert a == b

    def mean_move(temp):
        gen = np.random.default_rng(7)
        moves = [
            np.abs(np.subtract(perturb(plane, temp, (1.0, 1.0), gen).coeffs, plane.coeffs)).sum()
            for _ in range(200)
        ]
        return float(np.mean(moves))

    assert mean_move(1e-4) < mean_move(1.0) / 100
    with pytest.raises(ValueError):
        perturb(plane, 0.0, (1.0, 1.0), np.random.default_rng(0))


def test_accept_rules(rng):
    assert accept(1.0, 0.5, 0.1, rng)
    assert accept(1.0, 1.0, 0.1, rng)
    trials = 100_000
    rate = sum(accept(0.0, 0.1, 0.1, rng) for _ in range(trials)) / trials
    assert rate == pytest.approx(math.exp(-1), abs=0.01)


def test_axis_search_finds_step():
    samples = _two_pieces()
    X = np.asarray([s.input for s in samples])
    y = np.asarray([s.output for s in samples])
    plane, score = best_axis_split(X, y, regression_score, 3)
    assert plane.coeffs == (1.0, 0.0)
    assert -plane.offset == pytest.approx(4.5)
    assert score == pytest.approx(-1.0)


def test_sa_split_separates_two_pieces(fast_sa):
    samples = _two_pieces()
    plane, score = sa_split(samples, fast_sa, np.random.default_rng(0), min_side=4)
    assert score <= -0.999
    X = np.asarray([s.input for s in samples])
    below = plane.below(X)
    assert set(below[X[:, 0] < 5]) != set(below[X[:, 0] >= 5])
    assert len(set(below[X[:, 0] < 5])) == 1


def test_sa_split_linear_data_scores_minus_one(fast_sa):
    samples = [LabeledSample((x1, x2), 0.8 * x1 + 0.2 * x2) for x1 in range(5) for x2 in range(5)]
    found = sa_split(samples, fast_sa, np.random.default_rng(1), min_side=4)
    assert found is not None
    assert found[1] == pytest.approx(-1.0)


def test_sa_split_two_samples():
    samples = [LabeledSample((0.0, 0.0), 1.0), LabeledSample((1.0, 0.0), 5.0)]
    plane, score = sa_split(samples, AnnealSchedule(max_iters=10), np.random.default_rng(2))
    assert score == -1.0
    assert plane.below(np.asarray([[0.0, 0.0], [1.0, 0.0]])).sum() == 1


def test_sa_split_too_few_for_min_side(fast_sa):
    samples = [LabeledSample((float(x), 0.0), float(x)) for x in range(5)]
    assert sa_split(samples, fast_sa, np.random.default_rng(0), min_side=3) is None


def test_sa_incumbent_never_worse_than_axis_start(rng):
    gauss = SyntheticFunction("GAUSS", (0.9, -0.4))
    X = rng.uniform(-2, 2, size=(60, 2))
    samples = [LabeledSample(tuple(x), float(v)) for x, v in zip(X, gauss.evaluate_many(X))]
    y = np.asarray([s.output for s in samples])
    _, axis_score = best_axis_split(X, y, regression_score, 4)
    short = sa_split(samples, AnnealSchedule(max_iters=5), np.random.default_rng(4), min_side=4)
    long = sa_split(samples, AnnealSchedule(max_iters=5, restarts=3), np.random.default_rng(4), min_side=4)
    assert short[1] <= axis_score
    assert long[1] <= short[1]


def test_sa_split_is_deterministic(fast_sa):
    samples = _two_pieces()
    a = sa_split(samples, fast_sa, np.random.default_rng(42), min_side=4)
    b = sa_split(samples, fast_sa, np.random.default_rng(42), min_side=4)
    assert repr(a[0].to_dict()) == repr(b[0].to_dict())
    assert a[1] == b[1]


def test_perturb_spread_matches_schedule():
    plane = Hyperplane((1.0, -1.0), 0.5)
    gen = np.random.default_rng(11)
    temp, scale, offset_scale = 0.4, (1.0, 2.5), 0.3
    moves = np.asarray(
        [
            np.subtract(p.coeffs + (p.offset,), plane.coeffs + (plane.offset,))
            for p in (perturb(plane, temp, scale, gen, offset_scale) for _ in range(20_000))
        ]
    )
    expected = temp * np.asarray(scale + (offset_scale,))
    np.testing.assert_allclose(moves.std(axis=0), expected, rtol=0.05)
