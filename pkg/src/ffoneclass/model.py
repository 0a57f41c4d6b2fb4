"""Trained model container and its JSON document.

Floats are written with ``repr`` (shortest round-trip decimal), so loading a
saved model reproduces every parameter bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .losses import LossSpec, LossState
from .network import Network
from .scoring import Calibration

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


@dataclass
class TrainedModel:
    network: Network
    spec: LossSpec
    state: LossState | None = None
    calibration: Calibration | None = None
    seed: int | None = None
    # (mean, std) of the input standardiser, if one was applied
    standardizer: tuple[np.ndarray, np.ndarray] | None = None
    metadata: dict = field(default_factory=dict)

    def preprocess(self, features: np.ndarray) -> np.ndarray:
        if self.standardizer is None:
            return np.asarray(features, dtype=np.float64)
        mean, std = self.standardizer
        return (np.asarray(features, dtype=np.float64) - mean) / std

    def to_dict(self) -> dict:
        doc = {
            "format_version": FORMAT_VERSION,
            "architecture": list(self.network.architecture),
            "seed": self.seed,
            "loss": self.spec.to_dict(),
            "layers": self.network.to_dict()["layers"],
            "state": self.state.to_dict() if self.state is not None else None,
            "calibration": self.calibration.to_dict() if self.calibration is not None else None,
            "standardizer": None,
            "metadata": self.metadata,
        }
        if self.standardizer is not None:
            doc["standardizer"] = {"mean": self.standardizer[0].tolist(), "std": self.standardizer[1].tolist()}
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainedModel":
        try:
            net = Network.from_dict({"architecture": doc["architecture"], "layers": doc["layers"]})
            std = doc.get("standardizer")
            return cls(
                network=net,
                spec=LossSpec.from_dict(doc["loss"]),
                state=LossState.from_dict(doc["state"]) if doc.get("state") else None,
                calibration=Calibration.from_dict(doc["calibration"]) if doc.get("calibration") else None,
                seed=doc.get("seed"),
                standardizer=(np.array(std["mean"], dtype=np.float64), np.array(std["std"], dtype=np.float64))
                if std
                else None,
                metadata=doc.get("metadata") or {},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"not a valid model document: {exc}") from exc


def save_model(model: TrainedModel, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(model.to_dict(), indent=1, allow_nan=False) + "\n")
    return path


def load_model(path) -> TrainedModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: top-level JSON value must be an object")
    return TrainedModel.from_dict(doc)
