import os
import tempfile

# Logs and the default app directory must not touch the real home.
os.environ["DEPLOYTREE_HOME"] = tempfile.mkdtemp(prefix="deploytree-home-")

import numpy as np
import pytest

from deploytree.core.space import DeploymentSpace, LabeledSample
from deploytree.deployers.synthetic import SyntheticFunction, default_space
from deploytree.utilities.config import AnnealSchedule, ProfilerConfig


@pytest.fixture
def small_space() -> DeploymentSpace:
    return DeploymentSpace.from_levels({"x1": range(5), "x2": range(5)})


@pytest.fixture
def grid_20() -> DeploymentSpace:
    return default_space(2, 20)


@pytest.fixture
def grid_50() -> DeploymentSpace:
    return default_space(2, 50)


@pytest.fixture
def fast_sa() -> AnnealSchedule:
    return AnnealSchedule(max_iters=80, initial_temp=1.0, cooling_rate=0.95)


@pytest.fixture
def fast_profiler(fast_sa) -> ProfilerConfig:
    return ProfilerConfig(budget_B=40, batch_b=10, sa=fast_sa, bags=5)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def plane() -> SyntheticFunction:
    """y = 0.8 x1 + 0.2 x2 on raw coordinates."""
    return SyntheticFunction("LIN", (0.8, 0.2))


def make_samples(points, deployer) -> list[LabeledSample]:
    return [LabeledSample(tuple(float(v) for v in p), deployer.evaluate(p)) for p in points]


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    out = tmp_path / "out"
    monkeypatch.setenv("DEPLOYTREE_OUTPUT_DIR", str(out))
    return out
