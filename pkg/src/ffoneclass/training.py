"""Forward-forward and backpropagation training with plain SGD.

Forward-forward (``ff``) gives every layer its own loss and optimizer step:
the batch goes through layer ``l``, that layer's loss is evaluated on its
output, layer ``l`` is updated, and the updated layer's output becomes the
input of layer ``l + 1``. No gradient reaches earlier layers.

Backpropagation (``bp``) evaluates the loss on the last layer only, chains
the gradient back through every layer and updates them all in one step.
With a single layer the two regimes perform exactly the same arithmetic.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .losses import LossSpec, calibrate_state, distance_scores, evaluate
from .model import TrainedModel
from .network import DenseLayer, Network, forward_all, layer_forward, pre_activation
from .rng import SplitMix64
from .scoring import calibrate
from .tensor import ShapeError, matmul


class Regime(str, enum.Enum):
    FF = "ff"
    BP = "bp"


class TrainingDiverged(RuntimeError):
    """A loss or parameter became non-finite."""


@dataclass(frozen=True)
class TrainConfig:
    regime: Regime = Regime.FF
    learning_rate: float = 0.01
    epochs_max: int = 200
    batch_size: int | None = None  # None: full batch
    patience: int = 10
    nu: float = 0.05
    seed: int = 1
    ff_feed_updated: bool = True
    bp_loss: str = "final"  # "final" or "sum" of per-layer losses

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not self.learning_rate >= 0 or not np.isfinite(self.learning_rate):
            raise ValueError(f"learning rate must be finite and non-negative, got {self.learning_rate}")
        if self.epochs_max < 1:
            raise ValueError("epochs_max must be at least 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if not 0.0 < self.nu < 1.0:
            raise ValueError(f"nu must lie in (0, 1), got {self.nu}")
        if self.bp_loss not in ("final", "sum"):
            raise ValueError(f"bp_loss must be 'final' or 'sum', got {self.bp_loss!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = self.regime.value
        return d


@dataclass
class TrainReport:
    epochs_run: int = 0
    train_loss_curve: list[float] = field(default_factory=list)
    valid_loss_curve: list[float] = field(default_factory=list)
    stopped_early: bool = False

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "train_loss", "valid_loss"])
            for i, (t, v) in enumerate(zip(self.train_loss_curve, self.valid_loss_curve), start=1):
                w.writerow([i, repr(float(t)), repr(float(v))])
        return path


def sgd_step(layer: DenseLayer, grad_w: np.ndarray, grad_b: np.ndarray, lr: float, n: int) -> DenseLayer:
    """``W - (lr / n) grad_w``; no momentum, no weight decay."""
    grad_w = np.asarray(grad_w, dtype=np.float64)
    grad_b = np.asarray(grad_b, dtype=np.float64)
    if grad_w.shape != layer.w.shape or grad_b.shape != layer.b.shape:
        raise ShapeError(
            f"gradients {grad_w.shape}/{grad_b.shape} do not match layer {layer.w.shape}/{layer.b.shape}"
        )
    step = lr / n
    return DenseLayer(layer.w - step * grad_w, layer.b - step * grad_b)


def layer_grads(layer: DenseLayer, x: np.ndarray, grad_h: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Chain ``dL/dh`` (at the post-ReLU output) back to ``W``, ``b`` and the input."""
    z = pre_activation(layer, x)
    grad_h = np.asarray(grad_h, dtype=np.float64)
    if grad_h.shape != z.shape:
        raise ShapeError(f"output gradient {grad_h.shape} does not match layer output {z.shape}")
    g = np.where(z > 0, grad_h, 0.0)
    return matmul(np.asarray(x, dtype=np.float64).T, g), g.sum(axis=0), matmul(g, layer.w.T)


def _checked(ev, where: str):
    if not np.isfinite(ev.total) or not np.all(np.isfinite(ev.grad_h)):
        raise TrainingDiverged(f"non-finite loss at {where}")
    return ev


def ff_step(net: Network, x: np.ndarray, spec: LossSpec, lr: float, feed_updated: bool = True, where: str = ""):
    """One forward-forward pass over a batch.

    Returns the updated network and the list of inputs each layer saw.
    """
    n = x.shape[0]
    inputs, layers = [], []
    x_in = x
    for l, layer in enumerate(net.layers):
        inputs.append(x_in)
        h = layer_forward(layer, x_in)
        state = calibrate_state(h, spec)
        ev = _checked(evaluate(h, spec, state), f"{where}layer {l}")
        gw, gb, _ = layer_grads(layer, x_in, ev.grad_h)
        new = sgd_step(layer, gw, gb, lr, n)
        layers.append(new)
        x_in = layer_forward(new, x_in) if feed_updated else h
    return Network(layers, net.architecture), inputs


def bp_gradients(net: Network, x: np.ndarray, spec: LossSpec, loss_at: str = "final", states=None, where: str = ""):
    """Parameter gradients ``[(grad_w, grad_b), ...]`` of the summed loss, chained back through every layer.

    ``states`` optionally fixes the per-layer loss states; by default each is
    calibrated on this batch. Also returns the input each layer saw.
    """
    acts = forward_all(net, x)
    inputs = [x] + acts[:-1]
    L = net.depth
    grad = np.zeros_like(acts[-1])
    grads = [None] * L
    for l in range(L - 1, -1, -1):
        if l == L - 1 or loss_at == "sum":
            state = states[l] if states is not None else calibrate_state(acts[l], spec)
            ev = _checked(evaluate(acts[l], spec, state), f"{where}layer {l}")
            grad = grad + ev.grad_h if l < L - 1 else ev.grad_h
        gw, gb, gx = layer_grads(net.layers[l], inputs[l], grad)
        grads[l] = (gw, gb)
        grad = gx
    return grads, inputs


def bp_step(net: Network, x: np.ndarray, spec: LossSpec, lr: float, loss_at: str = "final", where: str = ""):
    """One backpropagation pass: full forward, backward chain, single update."""
    grads, inputs = bp_gradients(net, x, spec, loss_at, where=where)
    layers = [sgd_step(layer, gw, gb, lr, x.shape[0]) for layer, (gw, gb) in zip(net.layers, grads)]
    return Network(layers, net.architecture), inputs


def early_stop_check(valid_losses, patience: int) -> bool:
    """True when the best validation loss is more than ``patience`` epochs old."""
    if patience < 1:
        raise ValueError("patience must be at least 1")
    losses = [float(v) for v in valid_losses]
    if not losses or not np.all(np.isfinite(losses)):
        return False
    best = int(np.argmin(losses))  # first occurrence of the minimum
    return (len(losses) - 1 - best) > patience


def final_layer_loss(net: Network, x: np.ndarray, spec: LossSpec, state=None) -> float:
    """Mean final-layer loss; the state is calibrated on ``x`` unless given."""
    h = forward_all(net, x)[-1]
    if state is None:
        state = calibrate_state(h, spec)
    return evaluate(h, spec, state).total / x.shape[0]


def finalize(net: Network, x_train: np.ndarray, spec: LossSpec, nu: float, seed=None) -> TrainedModel:
    """Calibrate center, radius, training max distance and threshold on ``x_train``."""
    h = forward_all(net, x_train)[-1]
    state = calibrate_state(h, spec)
    cal = calibrate(distance_scores(h, spec, state), nu)
    return TrainedModel(network=net, spec=spec, state=state, calibration=cal, seed=seed)


def _batches(n: int, cfg: TrainConfig, rng: SplitMix64):
    if cfg.batch_size is None or cfg.batch_size >= n:
        yield np.arange(n)
        return
    order = rng.permutation(n)
    for s in range(0, n, cfg.batch_size):
        yield order[s : s + cfg.batch_size]


def _train(net: Network, x_train, x_valid, spec: LossSpec, cfg: TrainConfig, step, calibrate_model=True):
    x_train = np.asarray(x_train, dtype=np.float64)
    if x_train.ndim != 2 or x_train.shape[0] == 0:
        raise ValueError("training data must be a non-empty matrix")
    x_valid = None if x_valid is None or len(x_valid) == 0 else np.asarray(x_valid, dtype=np.float64)
    net = net.copy()
    rng = SplitMix64(cfg.seed, stream=1)
    report = TrainReport()
    for epoch in range(1, cfg.epochs_max + 1):
        for idx in _batches(x_train.shape[0], cfg, rng):
            net = step(net, x_train[idx], f"epoch {epoch}, ")
        h = forward_all(net, x_train)[-1]
        state = calibrate_state(h, spec)
        train_loss = evaluate(h, spec, state).total / x_train.shape[0]
        valid_loss = float("nan") if x_valid is None else final_layer_loss(net, x_valid, spec, state)
        if not np.isfinite(train_loss) or (x_valid is not None and not np.isfinite(valid_loss)):
            raise TrainingDiverged(f"non-finite loss after epoch {epoch}")
        report.train_loss_curve.append(float(train_loss))
        report.valid_loss_curve.append(float(valid_loss))
        report.epochs_run = epoch
        if x_valid is not None and early_stop_check(report.valid_loss_curve, cfg.patience):
            report.stopped_early = epoch < cfg.epochs_max
            break
    if not all(np.all(np.isfinite(p)) for p in net.parameters()):
        raise TrainingDiverged("non-finite parameters after training")
    model = finalize(net, x_train, spec, cfg.nu, cfg.seed) if calibrate_model else TrainedModel(net, spec, seed=cfg.seed)
    model.metadata["train_config"] = cfg.to_dict()
    return model, report


def train_ff(net: Network, x_train, x_valid, spec: LossSpec, cfg: TrainConfig, calibrate_model=True):
    if cfg.regime is not Regime.FF:
        raise ValueError("train_ff needs a forward-forward config")

    def step(net, xb, where):
        return ff_step(net, xb, spec, cfg.learning_rate, cfg.ff_feed_updated, where)[0]

    return _train(net, x_train, x_valid, spec, cfg, step, calibrate_model)


def train_bp(net: Network, x_train, x_valid, spec: LossSpec, cfg: TrainConfig, calibrate_model=True):
    if cfg.regime is not Regime.BP:
        raise ValueError("train_bp needs a backpropagation config")

    def step(net, xb, where):
        return bp_step(net, xb, spec, cfg.learning_rate, cfg.bp_loss, where)[0]

    return _train(net, x_train, x_valid, spec, cfg, step, calibrate_model)


def train(net: Network, x_train, x_valid, spec: LossSpec, cfg: TrainConfig, calibrate_model=True):
    fn = train_ff if cfg.regime is Regime.FF else train_bp
    return fn(net, x_train, x_valid, spec, cfg, calibrate_model)
