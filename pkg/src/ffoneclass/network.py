"""Dense ReLU layer stacks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rng import SplitMix64
from .tensor import ShapeError, add_row_broadcast, matmul, relu

INIT_SCHEME = "uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, SplitMix64 stream 0"


@dataclass
class DenseLayer:
    w: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.w = np.array(self.w, dtype=np.float64)
        self.b = np.array(self.b, dtype=np.float64)
        if self.w.ndim != 2 or self.b.ndim != 1 or self.w.shape[1] != self.b.shape[0]:
            raise ShapeError(f"weight {self.w.shape} and bias {self.b.shape} do not conform")

    @property
    def shape(self) -> tuple[int, int]:
        return self.w.shape

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.w.copy(), self.b.copy())


@dataclass
class Network:
    layers: list[DenseLayer]
    architecture: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.architecture:
            self.architecture = tuple([self.layers[0].w.shape[0]] + [l.w.shape[1] for l in self.layers])
        self.architecture = tuple(int(a) for a in self.architecture)
        if len(self.architecture) != len(self.layers) + 1:
            raise ShapeError(f"architecture {self.architecture} does not describe {len(self.layers)} layers")
        for i, layer in enumerate(self.layers):
            if layer.w.shape != (self.architecture[i], self.architecture[i + 1]):
                raise ShapeError(
                    f"layer {i} has shape {layer.w.shape}, architecture expects "
                    f"{(self.architecture[i], self.architecture[i + 1])}"
                )

    @property
    def depth(self) -> int:
        return len(self.layers)

    def copy(self) -> "Network":
        return Network([l.copy() for l in self.layers], self.architecture)

    def parameters(self) -> list[np.ndarray]:
        return [p for l in self.layers for p in (l.w, l.b)]

    def to_dict(self) -> dict:
        return {
            "architecture": list(self.architecture),
            "layers": [{"w": l.w.tolist(), "b": l.b.tolist()} for l in self.layers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        layers = [
            DenseLayer(np.array(l["w"], dtype=np.float64).reshape(len(l["w"]), -1), np.array(l["b"], dtype=np.float64))
            for l in d["layers"]
        ]
        return cls(layers, tuple(d["architecture"]))


def parse_architecture(arch) -> tuple[int, ...]:
    """Accept ``"4,10,10"``, ``"(4,10,10)"`` or a sequence of ints."""
    if isinstance(arch, str):
        arch = [a for a in arch.strip("()[] ").split(",") if a.strip()]
    widths = tuple(int(a) for a in arch)
    if len(widths) < 2 or any(w < 1 for w in widths):
        raise ValueError(f"architecture needs at least two positive widths, got {widths}")
    return widths


def init_network(architecture: Sequence[int], seed: int) -> Network:
    """Seeded fan-in uniform initialisation; ``(4, 10, 10)`` gives two layers."""
    widths = parse_architecture(architecture)
    rng = SplitMix64(seed, stream=0)
    layers = []
    for p, q in zip(widths[:-1], widths[1:]):
        bound = 1.0 / np.sqrt(p)
        w = rng.uniform(p * q, -bound, bound).reshape(p, q)
        layers.append(DenseLayer(w, np.zeros(q)))
    return Network(layers, widths)


def pre_activation(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    return add_row_broadcast(matmul(x, layer.w), layer.b)


def layer_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    return relu(pre_activation(layer, x))


def forward_all(net: Network, x: np.ndarray) -> list[np.ndarray]:
    """Activations of every layer in order; the last entry is the embedding."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.architecture[0]:
        raise ShapeError(f"input of shape {x.shape} does not match input width {net.architecture[0]}")
    outs = []
    for layer in net.layers:
        x = layer_forward(layer, x)
        outs.append(x)
    return outs
