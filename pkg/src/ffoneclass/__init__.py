"""One-class anomaly detection networks trained layer-locally (forward-forward)
or end-to-end (backpropagation)."""

__version__ = "0.1.0"

from .data import Dataset, Splits, load_banknote, make_splits, standardize, synthetic_banknote_like
from .experiments import ExperimentRecord, GridSpec, PreparedData, emit_tables, run_grid, summarize
from .landscape import LandscapeGrid, compute_landscape, export_landscape
from .losses import LossEval, LossKind, LossSpec, LossState, calibrate_state, distance_scores, evaluate, grad_check
from .model import TrainedModel, load_model, save_model
from .network import DenseLayer, Network, forward_all, init_network, layer_forward
from .scoring import Calibration, MetricTriple, accuracy, auc, calibrate, f1, score_and_flag
from .training import Regime, TrainConfig, TrainReport, early_stop_check, train, train_bp, train_ff

__all__ = [
    "Calibration", "Dataset", "DenseLayer", "ExperimentRecord", "GridSpec", "LandscapeGrid", "LossEval",
    "LossKind", "LossSpec", "LossState", "MetricTriple", "Network", "PreparedData", "Regime", "Splits",
    "TrainConfig", "TrainReport", "TrainedModel", "accuracy", "auc", "calibrate", "calibrate_state",
    "compute_landscape", "distance_scores", "early_stop_check", "emit_tables", "evaluate", "export_landscape",
    "f1", "forward_all", "grad_check", "init_network", "layer_forward", "load_banknote", "load_model",
    "make_splits", "run_grid", "save_model", "score_and_flag", "standardize", "summarize",
    "synthetic_banknote_like", "train", "train_bp", "train_ff",
]
