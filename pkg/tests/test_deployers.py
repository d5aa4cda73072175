import math
import sys

import numpy as np
import pytest

from deploytree.core.space import DeploymentSpace
from deploytree.deployers.base import deploy_batch
from deploytree.deployers.command import CommandDeployer, command_eval
from deploytree.deployers.factory import build_deployer
from deploytree.deployers.replay import GridReplay, replay_eval, replay_load
from deploytree.deployers.synthetic import (
    PlaneBump,
    SyntheticFunction,
    classify_complexity,
    complexity_r2,
    default_space,
    dump_grid,
    eval_synthetic,
)
from deploytree.errors import ConfigError, DeployError, ReplayError, SpaceError
from deploytree.utilities.config import DeployerConfig


@pytest.mark.parametrize(
    "kind, expected",
    [
        ("LIN", 1.0),
        ("POLY", 1.0),
        ("EXP", math.e),
        ("EXPABS", math.e),
        ("EXPSQ", math.exp(-1)),
        ("GAUSS", math.exp(-1)),
        ("WAVE", math.cos(1) * math.e),
        ("HAT", math.exp(-1)),
    ],
)
def test_reference_values(kind, expected):
    f = SyntheticFunction(kind, (0.5, 0.5))
    assert f.evaluate((1.0, 1.0)) == pytest.approx(expected)


def test_values_at_origin():
    assert eval_synthetic(SyntheticFunction("GAUSS", (0.3, -0.7)), (0.0, 0.0)) == 1.0
    assert SyntheticFunction("HAT", (0.3, -0.7)).evaluate((0.0, 0.0)) == 0.0


def test_seeded_coefficients_and_scaling(grid_20):
    f = SyntheticFunction.from_seed("LIN", grid_20, 3)
    assert f == SyntheticFunction.from_seed("LIN", grid_20, 3)
    assert all(-1 <= a <= 1 for a in f.coeffs)
    corners = f.scale(np.array([[0.0, 0.0], [19.0, 19.0]]))
    assert corners.tolist() == [[-2.0, -2.0], [2.0, 2.0]]


def test_overflow_is_a_deploy_error():
    with pytest.raises(DeployError) as info:
        SyntheticFunction("EXP", (1.0,)).evaluate((1000.0,))
    assert info.value.kind == "overflow"


def test_wrong_arity():
    with pytest.raises(SpaceError):
        SyntheticFunction("LIN", (1.0, 1.0)).evaluate((1.0,))


def test_complexity_classes(grid_20):
    lin = SyntheticFunction.from_seed("LIN", grid_20, 0)
    assert complexity_r2(lin, grid_20) == pytest.approx(1.0)
    assert classify_complexity(complexity_r2(lin, grid_20)) == "LOW"
    assert classify_complexity(0.5) == "AVG"
    assert classify_complexity(0.1) == "HIGH"


def test_bump_peaks_at_center(grid_20):
    bump = PlaneBump.from_seed(grid_20, 1)
    center = np.asarray(bump.center)
    assert bump.evaluate(center) == pytest.approx(0.8 * center[0] + 0.2 * center[1] + 20.0)
    assert bump.in_box(center[None, :])[0]
    far = center + 10 * bump.sigma
    assert bump.evaluate(far) == pytest.approx(0.8 * far[0] + 0.2 * far[1], abs=1e-6)


def test_dump_and_replay_agree(tmp_path, grid_20):
    f = SyntheticFunction.from_seed("WAVE", grid_20, 2)
    path = tmp_path / "wave.csv"
    assert dump_grid(path, grid_20, f) == 400
    replay = replay_load(path, grid_20)
    assert len(replay) == 400
    assert np.array_equal(replay.evaluate_many(grid_20.grid), f.evaluate_many(grid_20.grid))
    assert replay.function_name == "wave"


def test_replay_missing_point(small_space):
    replay = GridReplay(small_space, np.arange(25.0))
    assert replay_eval(replay, (1.0, 2.0)) == 7.0
    with pytest.raises(DeployError) as info:
        replay.evaluate((1.5, 2.0))
    assert info.value.kind == "missing-point"


def test_replay_rejects_gaps_and_duplicates(tmp_path):
    space = DeploymentSpace.from_levels({"a": [1, 2]})
    gap = tmp_path / "gap.csv"
    gap.write_text("a,metric\n1,3.0\n")
    with pytest.raises(ReplayError):
        GridReplay.load(gap, space)
    twice = tmp_path / "twice.csv"
    twice.write_text("a,metric\n1,3.0\n1,4.0\n2,5.0\n")
    with pytest.raises(ReplayError):
        GridReplay.load(twice, space)
    with pytest.raises(ReplayError):
        GridReplay.load(tmp_path / "absent.csv", space)


def test_replay_reads_category_labels(tmp_path):
    space = DeploymentSpace.from_dict(
        {
            "dimensions": [{"name": "engine"}, {"name": "n", "levels": [1, 2]}],
            "categorical": {"engine": ["wiredtiger", "inmemory"]},
        }
    )
    path = tmp_path / "db.csv"
    path.write_text("engine,n,metric\nwiredtiger,1,1\nwiredtiger,2,2\ninmemory,1,3\ninmemory,2,4\n")
    replay = GridReplay.load(path, space)
    assert replay.evaluate((space.encode("engine", "inmemory"), 2.0)) == 4.0


def test_command_deployer_reads_last_line():
    deployer = CommandDeployer(f"{sys.executable} -c print({{x}}*2)", ["x"])
    assert deployer.argv((3.0,))[-1] == "print(3*2)"
    assert command_eval(deployer, (3.0,)) == 6.0
    assert not deployer.deterministic


def test_command_deployer_failures():
    with pytest.raises(DeployError) as info:
        CommandDeployer("false", ["x"]).evaluate((1.0,))
    assert info.value.kind == "process-failed"
    with pytest.raises(DeployError) as info:
        CommandDeployer("echo not-a-number", ["x"]).evaluate((1.0,))
    assert info.value.kind == "parse-failed"
    with pytest.raises(DeployError) as info:
        CommandDeployer("sleep 5", ["x"], timeout_secs=0.2).evaluate((1.0,))
    assert info.value.kind == "timeout"


def test_command_template_checks():
    with pytest.raises(ConfigError):
        CommandDeployer("bench --threads {threads}", ["x"])
    with pytest.raises(ConfigError):
        CommandDeployer("", ["x"])


def test_batch_results_are_sorted_and_split(small_space):
    replay = GridReplay(small_space, np.arange(25.0))
    points = [(4.0, 4.0), (9.0, 9.0), (0.0, 1.0)]
    result = deploy_batch(replay, points, parallelism=3)
    assert [s.input for s in result.succeeded] == [(0.0, 1.0), (4.0, 4.0)]
    assert [f.point for f in result.failed] == [(9.0, 9.0)]


def test_build_deployer_defaults():
    space, deployer = build_deployer(DeployerConfig())
    assert space == default_space(2, 100)
    assert deployer.function_name == "LIN"
    with pytest.raises(ConfigError):
        build_deployer(DeployerConfig.model_validate({"kind": "replay", "replay": {"path": "x.csv"}}))
