"""JSON run configuration shared by every CLI command."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .data import default_data_path
from .experiments import DEFAULT_ARCHITECTURES, GridSpec
from .losses import LOSS_ORDER, LossSpec
from .network import parse_architecture
from .training import TrainConfig

OUTPUT_ENV = "FFOC_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


def parse_seeds(value) -> list[int]:
    """``"1..50"`` (inclusive), ``"1,2,5"``, an int, or a list of ints."""
    if isinstance(value, int):
        return [value]
    if isinstance(value, str):
        if ".." in value:
            lo, hi = value.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(s) for s in value.split(",") if s.strip()]
    return [int(s) for s in value]


def parse_arch_list(value) -> list[tuple[int, ...]]:
    """``"4,10,10;4,25,25"`` or a list of width lists."""
    if isinstance(value, str):
        value = [v for v in value.split(";") if v.strip()]
    return [parse_architecture(a) for a in value]


@dataclass
class RunConfig:
    data_path: str | None = None
    output_dir: str | None = None
    # single-run training
    loss: str = "goodness"
    c: float | None = None
    nu: float = 0.05
    arch: str = "4,10,10"
    regime: str = "ff"
    seed: int = 1
    learning_rate: float = 0.01
    epochs_max: int = 200
    batch_size: int | None = None
    patience: int = 10
    ff_feed_updated: bool = True
    bp_loss: str = "final"
    # data
    split_fractions: list = field(default_factory=lambda: [0.6, 0.2, 0.2])
    split_seed: int = 0
    oneclass: bool = True
    move_to_test: bool = False
    standardize: bool = True
    # grid
    grid_losses: list = field(default_factory=lambda: [k.value for k in LOSS_ORDER])
    grid_c: dict = field(default_factory=dict)
    grid_archs: list = field(default_factory=lambda: [list(a) for a in DEFAULT_ARCHITECTURES])
    grid_regimes: list = field(default_factory=lambda: ["ff", "bp"])
    grid_seeds: object = "1..50"
    workers: int | None = None
    record_timing: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: configuration must be a JSON object")
        return cls.from_dict(doc)

    def with_overrides(self, **overrides) -> "RunConfig":
        cfg = dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})
        cfg.validate()
        return cfg

    def validate(self):
        try:
            self.loss_spec()
            self.train_config()
            self.grid_spec()
            if len(self.split_fractions) != 3 or abs(sum(self.split_fractions) - 1.0) > 1e-9:
                raise ValueError(f"split_fractions must be three numbers summing to 1, got {self.split_fractions}")
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def resolved_data_path(self) -> Path:
        return Path(self.data_path) if self.data_path else default_data_path()

    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV) or "runs")

    def loss_spec(self) -> LossSpec:
        return LossSpec(self.loss, self.c, self.nu)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            regime=self.regime,
            learning_rate=self.learning_rate,
            epochs_max=self.epochs_max,
            batch_size=self.batch_size,
            patience=self.patience,
            nu=self.nu,
            seed=self.seed,
            ff_feed_updated=self.ff_feed_updated,
            bp_loss=self.bp_loss,
        )

    def grid_spec(self) -> GridSpec:
        losses = [LossSpec(k, self.grid_c.get(k), self.nu) for k in self.grid_losses]
        return GridSpec(
            losses=tuple(losses),
            architectures=tuple(parse_arch_list(self.grid_archs)),
            regimes=tuple(self.grid_regimes),
            seeds=tuple(parse_seeds(self.grid_seeds)),
            template=self.train_config(),
        )
