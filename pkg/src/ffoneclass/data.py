"""Banknote-authentication data: loading, splitting and standardisation.

The published file has no header and five comma-separated columns:
variance, skewness, curtosis and entropy of the wavelet-transformed note
image, then the class (0 genuine, 1 counterfeit).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import SplitMix64

FEATURE_NAMES = ("variance", "skewness", "curtosis", "entropy")
BANKNOTE_ROWS = 1372
BANKNOTE_COUNTERFEIT = 610
BANKNOTE_FILENAME = "data_banknote_authentication.txt"
STD_FLOOR = 1e-12


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels).astype(np.int64)
        if f.ndim != 2 or f.shape[1] != len(FEATURE_NAMES):
            raise DataFormatError(f"expected {len(FEATURE_NAMES)} feature columns, got shape {f.shape}")
        if y.shape != (f.shape[0],):
            raise DataFormatError(f"{y.size} labels for {f.shape[0]} rows")
        if not np.all((y == 0) | (y == 1)):
            raise DataFormatError("labels must be 0 or 1")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.features.shape[0]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx])


def default_data_path() -> Path:
    """``$FFOC_BANKNOTE`` if set, else ``data/data_banknote_authentication.txt``."""
    env = os.environ.get("FFOC_BANKNOTE")
    if env:
        return Path(env)
    return Path(__file__).resolve().parents[2] / "data" / BANKNOTE_FILENAME


def load_banknote(path) -> Dataset:
    path = Path(path)
    rows, labels = [], []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise DataFormatError(f"{path}:{lineno}: expected 5 columns, found {len(parts)}")
            try:
                rows.append([float(p) for p in parts[:4]])
                label = float(parts[4])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
            if label not in (0.0, 1.0):
                raise DataFormatError(f"{path}:{lineno}: label must be 0 or 1, got {parts[4]!r}")
            labels.append(int(label))
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return Dataset(np.array(rows), np.array(labels))


def is_canonical_banknote(ds: Dataset) -> bool:
    return len(ds) == BANKNOTE_ROWS and int(ds.labels.sum()) == BANKNOTE_COUNTERFEIT


@dataclass(frozen=True)
class Splits:
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    split_seed: int = 0
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)
    oneclass: bool = True
    move_to_test: bool = False

    @property
    def standardizer(self) -> tuple[np.ndarray, np.ndarray]:
        return self.mean, self.std

    def write_indices(self, directory) -> list[Path]:
        """One plain-text file per split, one index per line."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        out = []
        for name in ("train", "valid", "test"):
            p = directory / f"{name}_indices.txt"
            p.write_text("".join(f"{int(i)}\n" for i in getattr(self, name)))
            out.append(p)
        return out

    def metadata(self) -> dict:
        return {
            "split_seed": self.split_seed,
            "fractions": list(self.fractions),
            "oneclass": self.oneclass,
            "move_to_test": self.move_to_test,
            "sizes": {"train": len(self.train), "valid": len(self.valid), "test": len(self.test)},
        }


def make_splits(
    ds: Dataset,
    fractions=(0.6, 0.2, 0.2),
    split_seed: int = 0,
    oneclass: bool = True,
    move_to_test: bool = False,
    standardize: bool = True,
) -> Splits:
    """Stratified shuffle split, identical for every model seed.

    With ``oneclass`` set, counterfeit rows are taken out of the training
    split; ``move_to_test`` decides whether they join the test split or are
    dropped. The standardiser is fitted on the final training rows (identity
    when ``standardize`` is off).
    """
    fr = tuple(float(f) for f in fractions)
    if len(fr) != 3 or any(f <= 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must be three positive numbers summing to 1, got {fractions}")
    rng = SplitMix64(split_seed, stream=7)
    parts = {"train": [], "valid": [], "test": []}
    for cls in (0, 1):
        idx = np.flatnonzero(ds.labels == cls)
        idx = idx[rng.permutation(idx.size)]
        n_train = int(round(fr[0] * idx.size))
        n_valid = int(round(fr[1] * idx.size))
        parts["train"].append(idx[:n_train])
        parts["valid"].append(idx[n_train : n_train + n_valid])
        parts["test"].append(idx[n_train + n_valid :])
    train, valid, test = (np.sort(np.concatenate(parts[k])) for k in ("train", "valid", "test"))
    if oneclass:
        anomalous = ds.labels[train] == 1
        if move_to_test:
            test = np.sort(np.concatenate([test, train[anomalous]]))
        train = train[~anomalous]
    if train.size == 0:
        raise ValueError("training split is empty")
    if standardize:
        x = ds.features[train]
        mean = x.mean(axis=0)
        std = np.maximum(x.std(axis=0), STD_FLOOR)
    else:
        mean = np.zeros(ds.features.shape[1])
        std = np.ones(ds.features.shape[1])
    return Splits(train, valid, test, mean, std, int(split_seed), fr, bool(oneclass), bool(move_to_test))


def standardize(splits: Splits, m: np.ndarray) -> np.ndarray:
    """Apply the training-split statistics to ``m``."""
    return (np.asarray(m, dtype=np.float64) - splits.mean) / splits.std


# Per-class moments of the banknote features, for demos and smoke tests only.
_SURROGATE_MOMENTS = {
    0: (np.array([2.28, 4.26, 0.80, -1.15]), np.array([2.02, 5.14, 3.24, 2.13])),
    1: (np.array([-1.87, -0.99, 2.15, -1.25]), np.array([1.88, 5.40, 5.26, 2.07])),
}


def synthetic_banknote_like(n_genuine: int = 762, n_counterfeit: int = 610, seed: int = 0) -> Dataset:
    """Independent-Gaussian stand-in shaped like the banknote data.

    Not a substitute for the real file: it has no feature correlations, so
    any metrics on it say nothing about the real benchmark.
    """
    rng = SplitMix64(seed, stream=11)
    feats, labels = [], []
    for cls, n in ((0, n_genuine), (1, n_counterfeit)):
        mu, sd = _SURROGATE_MOMENTS[cls]
        feats.append(mu + sd * rng.normal(4 * n).reshape(n, 4))
        labels.append(np.full(n, cls))
    return Dataset(np.vstack(feats), np.concatenate(labels))
