"""Two-dimensional loss slices around one layer's trained weights.

Two random directions shaped like the layer's weight matrix are drawn,
rescaled column by column to the norms of the matching weight columns, and
the second is made orthogonal to the first. The layer loss is then evaluated
at ``W + alpha * D1 + beta * D2`` on that layer's inputs, with every other
layer held fixed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .losses import calibrate_state, evaluate
from .network import DenseLayer, forward_all, layer_forward
from .rng import SplitMix64


@dataclass(frozen=True)
class LandscapeGrid:
    layer_index: int
    alphas: np.ndarray
    betas: np.ndarray
    values: np.ndarray
    direction_seed: int
    metadata: dict = field(default_factory=dict)

    @property
    def center_value(self) -> float:
        return float(self.values[len(self.alphas) // 2, len(self.betas) // 2])


def layer_directions(w: np.ndarray, direction_seed: int, layer_index: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Column-normalised random directions, the second orthogonal to the first."""
    p, q = w.shape
    rng = SplitMix64(direction_seed, stream=1000 + layer_index)
    col_norms = np.linalg.norm(w, axis=0)
    dirs = []
    for _ in range(2):
        d = rng.normal(p * q).reshape(p, q)
        dn = np.linalg.norm(d, axis=0)
        dirs.append(d * np.divide(col_norms, dn, out=np.zeros(q), where=dn > 0))
    d1, d2 = dirs
    n11 = float(np.sum(d1 * d1))
    if n11 > 0:
        d2 = d2 - (np.sum(d1 * d2) / n11) * d1
    return d1, d2


def layer_loss(layer: DenseLayer, x: np.ndarray, spec, state=None) -> float:
    """Mean loss of one layer's output; the state is recalibrated unless given."""
    h = layer_forward(layer, x)
    if state is None:
        state = calibrate_state(h, spec)
    return evaluate(h, spec, state).total / x.shape[0]


def compute_landscape(
    model,
    layer: int,
    data: np.ndarray,
    grid_radius: float = 1.0,
    steps: int = 41,
    direction_seed: int = 0,
    recalibrate: bool = True,
) -> LandscapeGrid:
    """Loss surface of ``model.network.layers[layer]`` over a ``steps x steps`` grid.

    ``data`` is network input (already standardised). With ``recalibrate``
    off, the center and radius stay at their values for the unperturbed layer.
    """
    net = model.network
    if not 0 <= layer < net.depth:
        raise IndexError(f"layer index {layer} out of range for a {net.depth}-layer network")
    if steps < 3 or steps % 2 == 0:
        raise ValueError(f"steps must be odd and at least 3, got {steps}")
    data = np.asarray(data, dtype=np.float64)
    x = data if layer == 0 else forward_all(net, data)[layer - 1]
    base = net.layers[layer]
    d1, d2 = layer_directions(base.w, direction_seed, layer)

    k = (steps - 1) // 2
    coords = grid_radius * (np.arange(-k, k + 1, dtype=np.float64) / k)
    frozen = None if recalibrate else calibrate_state(layer_forward(base, x), model.spec)
    values = np.empty((steps, steps))
    for i, a in enumerate(coords):
        for j, b in enumerate(coords):
            w = base.w + a * d1 + b * d2
            values[i, j] = layer_loss(DenseLayer(w, base.b), x, model.spec, frozen)
    meta = {
        "layer_index": layer,
        "loss": model.spec.to_dict(),
        "seed": model.seed,
        "direction_seed": direction_seed,
        "grid_radius": grid_radius,
        "steps": steps,
        "recalibrate": recalibrate,
        "n_samples": int(x.shape[0]),
        "directions": "gaussian, per-column rescaled to the weight column norms, second orthogonalised to the first",
        "frobenius_inner_product": float(np.sum(d1 * d2)),
    }
    return LandscapeGrid(layer, coords, coords.copy(), values, direction_seed, meta)


def export_landscape(grid: LandscapeGrid, path) -> tuple[Path, Path]:
    """Write ``alpha,beta,loss`` rows (alphas outer, betas inner) and a JSON sidecar."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "beta", "loss"])
        for i, a in enumerate(grid.alphas):
            for j, b in enumerate(grid.betas):
                w.writerow([repr(float(a)), repr(float(b)), repr(float(grid.values[i, j]))])
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(grid.metadata, indent=1, sort_keys=True) + "\n")
    return path, sidecar
