# Loss surface around each layer of a forward-forward LS-SVDD model.
# Directions are random, rescaled column-wise to the weights, and
# orthogonal to each other; the center cell is the trained weights.

import tempfile
from pathlib import Path

import numpy as np
from _data import demo_data

from ffoneclass.landscape import compute_landscape, export_landscape
from ffoneclass.losses import LossSpec
from ffoneclass.network import init_network
from ffoneclass.training import TrainConfig, train

ds, data = demo_data()
model, report = train(init_network((4, 10, 10), 1), data.x_train, data.x_valid, LossSpec("ls_svdd"), TrainConfig())
out = Path(tempfile.mkdtemp())

for layer in (0, 1):
    grid = compute_landscape(model, layer, data.x_train, grid_radius=1.0, steps=41)
    path, _ = export_landscape(grid, out / f"landscape_layer{layer}.csv")
    v = grid.values
    print(f"layer {layer}: center {grid.center_value:.4f}, min {v.min():.4f}, max {v.max():.4f} -> {path}")

print("final training loss", report.train_loss_curve[-1])

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for layer, ax in enumerate(axes):
        grid = compute_landscape(model, layer, data.x_train, steps=41)
        cs = ax.contourf(grid.alphas, grid.betas, np.log1p(grid.values.T), levels=30)
        ax.set_title(f"layer {layer}")
        fig.colorbar(cs, ax=ax)
    fig.savefig(out / "landscapes.png", dpi=120)
    print("figure:", out / "landscapes.png")
