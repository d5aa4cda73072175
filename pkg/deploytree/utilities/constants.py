import os
from pathlib import Path

APP_DIR = Path(os.environ.get("DEPLOYTREE_HOME", Path.home() / ".deploytree"))
LOG_DIR = APP_DIR / "logs"
RUNS_DB_NAME = "runs.json"
OUTPUT_DIR_ENV = "DEPLOYTREE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "deploytree-out"

# Largest grid we are willing to materialize in memory.
MAX_ENUMERATION = 5_000_000

DEFAULT_FOLDS = 10
DEFAULT_BAGS = 25
DEFAULT_HEATMAP_BINS = 20
DEFAULT_REPETITIONS = 20

# 2 x 100 = 10K points; 7 ** 5 is the closest equal-level 5-dim grid.
SYNTHETIC_LEVELS_2D = 100
SYNTHETIC_LEVELS_5D = 7
SYNTHETIC_BOX = (-2.0, 2.0)

RESULT_COLUMNS = (
    "exp_id",
    "deployer",
    "fn",
    "n_dims",
    "grid",
    "B",
    "b",
    "SR",
    "mode",
    "scorer",
    "retrain",
    "w_error",
    "w_size",
    "w_cost",
    "seed",
    "mse",
    "mae",
    "wall_ms",
)
