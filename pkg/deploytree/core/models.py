import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from deploytree.core.linmodel import BaggedLinearModel, LinearModel
from deploytree.core.obtree import ObliqueTree
from deploytree.errors import ConfigError


class FinalModel(Protocol):
    kind: str

    def predict_many(self, X: np.ndarray) -> np.ndarray: ...

    def to_dict(self) -> dict: ...


@dataclass(frozen=True)
class LinearFinalModel:
    """One OLS model over the whole space."""

    model: LinearModel

    kind = "global-ols"

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return self.model.predict_many(X)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.model.to_dict()}


def load_model(data: dict) -> FinalModel:
    match data.get("kind"):
        case "tree":
            return ObliqueTree.from_dict(data)
        case "global-ols":
            return LinearFinalModel(LinearModel.from_dict(data))
        case "bagged-linear":
            return BaggedLinearModel.from_dict(data)
    raise ConfigError(f"Unknown model kind {data.get('kind')!r}")


def save_model(path: str | Path, model: FinalModel) -> None:
    with open(path, "w") as file:
        json.dump(model.to_dict(), file, indent=4)


def read_model(path: str | Path) -> FinalModel:
    try:
        with open(path, "r") as file:
            return load_model(json.load(file))
    except (OSError, json.JSONDecodeError, KeyError) as e:
        raise ConfigError(f"Unable to read model {path}: {e}") from e
