"""Grid runs over losses x architectures x regimes x seeds, and their summaries.

Every run is keyed by ``(loss, arch, regime, seed)``. Records are appended to
``results.csv`` as they finish so an interrupted grid can resume; when the
grid completes the file is rewritten in canonical key order, which makes it
byte-identical between reruns.
"""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset, Splits
from .losses import LOSS_ORDER, LossKind, LossSpec
from .network import init_network, parse_architecture
from .scoring import evaluate_metrics, score_and_flag
from .training import Regime, TrainConfig, train

log = logging.getLogger(__name__)

RESULT_COLUMNS = ["loss", "arch", "regime", "seed", "accuracy", "f1", "auc", "epochs", "wall_ms", "status"]
DEFAULT_ARCHITECTURES = ((4, 10, 10), (4, 25, 25), (4, 50, 50), (4, 100, 100))
METRICS = ("accuracy", "f1", "auc")


def arch_label(arch: Sequence[int]) -> str:
    return "-".join(str(a) for a in arch)


def parse_arch_label(label: str) -> tuple[int, ...]:
    return parse_architecture(label.replace("-", ","))


@dataclass(frozen=True)
class GridSpec:
    losses: tuple[LossSpec, ...] = tuple(LossSpec(k) for k in LOSS_ORDER)
    architectures: tuple[tuple[int, ...], ...] = DEFAULT_ARCHITECTURES
    regimes: tuple[Regime, ...] = (Regime.FF, Regime.BP)
    seeds: tuple[int, ...] = tuple(range(1, 51))
    template: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        object.__setattr__(self, "losses", tuple(l if isinstance(l, LossSpec) else LossSpec(l) for l in self.losses))
        object.__setattr__(self, "architectures", tuple(parse_architecture(a) for a in self.architectures))
        object.__setattr__(self, "regimes", tuple(Regime(r) for r in self.regimes))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        for name in ("losses", "architectures", "regimes", "seeds"):
            if not getattr(self, name):
                raise ValueError(f"grid axis {name!r} is empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("grid seeds must be distinct")
        if len({l.kind for l in self.losses}) != len(self.losses):
            raise ValueError("each loss kind may appear only once in a grid")

    def keys(self) -> list[tuple[str, str, str, int]]:
        return [
            (l.kind.value, arch_label(a), r.value, s)
            for l in self.losses
            for a in self.architectures
            for r in self.regimes
            for s in self.seeds
        ]

    def loss_spec(self, kind: str) -> LossSpec:
        return next(l for l in self.losses if l.kind.value == kind)

    def __len__(self) -> int:
        return len(self.losses) * len(self.architectures) * len(self.regimes) * len(self.seeds)

    def to_dict(self) -> dict:
        return {
            "losses": [l.to_dict() for l in self.losses],
            "architectures": [list(a) for a in self.architectures],
            "regimes": [r.value for r in self.regimes],
            "seeds": list(self.seeds),
            "template": self.template.to_dict(),
        }


@dataclass(frozen=True)
class ExperimentRecord:
    loss: str
    arch: str
    regime: str
    seed: int
    accuracy: float = float("nan")
    f1: float = float("nan")
    auc: float = float("nan")
    epochs: int = 0
    wall_ms: float = float("nan")
    status: str = "ok"

    @property
    def key(self) -> tuple[str, str, str, int]:
        return (self.loss, self.arch, self.regime, self.seed)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def row(self, record_timing: bool = False) -> list[str]:
        def num(v):
            return repr(float(v)) if self.ok else ""

        wall = repr(round(float(self.wall_ms), 3)) if record_timing and np.isfinite(self.wall_ms) else ""
        return [self.loss, self.arch, self.regime, str(self.seed), num(self.accuracy), num(self.f1),
                num(self.auc), str(self.epochs), wall, self.status]

    @classmethod
    def from_row(cls, row: dict) -> "ExperimentRecord":
        def num(v):
            return float(v) if v not in ("", None) else float("nan")

        status = row.get("status") or ""
        if status != "ok" and not status.startswith("failed"):
            raise ValueError(f"unrecognised run status {status!r}")
        return cls(row["loss"], row["arch"], row["regime"], int(row["seed"]), num(row["accuracy"]),
                   num(row["f1"]), num(row["auc"]), int(row["epochs"] or 0), num(row["wall_ms"]), row["status"])


@dataclass(frozen=True)
class PreparedData:
    """Standardised arrays shared by every run of a grid."""

    x_train: np.ndarray
    x_valid: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray

    @classmethod
    def from_splits(cls, ds: Dataset, splits: Splits) -> "PreparedData":
        def std(idx):
            return (ds.features[idx] - splits.mean) / splits.std

        return cls(std(splits.train), std(splits.valid), std(splits.test), ds.labels[splits.test])


def run_one(key, spec: LossSpec, template: TrainConfig, data: PreparedData) -> ExperimentRecord:
    loss, arch, regime, seed = key
    start = time.perf_counter()
    cfg = replace(template, regime=Regime(regime), seed=seed, nu=template.nu)
    try:
        net = init_network(parse_arch_label(arch), seed)
        model, report = train(net, data.x_train, data.x_valid, spec, cfg)
        p, flags = score_and_flag(model, data.x_test)
        m = evaluate_metrics(p, flags, data.y_test)
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        return ExperimentRecord(loss, arch, regime, seed, wall_ms=1e3 * (time.perf_counter() - start),
                                status=f"failed: {type(exc).__name__}: {exc}")
    return ExperimentRecord(loss, arch, regime, seed, m.accuracy, m.f1, m.auc, report.epochs_run,
                            1e3 * (time.perf_counter() - start))


_WORKER_STATE: dict = {}


def _init_worker(data: PreparedData, grid: GridSpec):
    _WORKER_STATE["data"] = data
    _WORKER_STATE["grid"] = grid


def _run_key(key):
    grid = _WORKER_STATE["grid"]
    return run_one(key, grid.loss_spec(key[0]), grid.template, _WORKER_STATE["data"])


def read_results(path) -> list[ExperimentRecord]:
    path = Path(path)
    if not path.exists():
        return []
    records = []
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                records.append(ExperimentRecord.from_row(row))
            except (KeyError, TypeError, ValueError):
                # a line cut short by an interrupted run
                log.warning("skipping malformed results row %r", row)
    return records


def write_results(records: Iterable[ExperimentRecord], path, record_timing: bool = False) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in records:
            w.writerow(r.row(record_timing))
    return path


def _sort_key(grid: GridSpec):
    order = {k: i for i, k in enumerate(grid.keys())}
    return lambda r: (order.get(r.key, len(order)), r.key)


def run_grid(
    grid: GridSpec,
    data: PreparedData,
    results_path=None,
    workers: int = 1,
    record_timing: bool = False,
) -> list[ExperimentRecord]:
    """Run every grid cell not already present in ``results_path``.

    Failed runs come back as records whose ``status`` starts with ``failed``.
    ``wall_ms`` is left blank in the CSV unless ``record_timing`` is set, since
    timings would break byte-identical reruns.
    """
    done: dict = {}
    fh = writer = None
    order = _sort_key(grid)
    if results_path is not None:
        results_path = Path(results_path)
        results_path.parent.mkdir(parents=True, exist_ok=True)
        done = {r.key: r for r in read_results(results_path)}
        write_results(sorted(done.values(), key=order), results_path, record_timing)
        fh = results_path.open("a", newline="")
        writer = csv.writer(fh, lineterminator="\n")
    todo = [k for k in grid.keys() if k not in done]
    if len(todo) < len(grid):
        log.info("resuming grid: %d of %d runs already recorded", len(grid) - len(todo), len(grid))

    def sink(rec: ExperimentRecord):
        done[rec.key] = rec
        if writer is not None:
            writer.writerow(rec.row(record_timing))
            fh.flush()
        if not rec.ok:
            log.warning("run %s failed: %s", rec.key, rec.status)

    try:
        if workers <= 1 or len(todo) <= 1:
            for key in todo:
                sink(run_one(key, grid.loss_spec(key[0]), grid.template, data))
        else:
            with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(data, grid)) as pool:
                for rec in pool.map(_run_key, todo, chunksize=max(1, len(todo) // (8 * workers))):
                    sink(rec)
    finally:
        if fh is not None:
            fh.close()

    if results_path is not None:
        write_results(sorted(done.values(), key=order), results_path, record_timing)
    return [done[k] for k in grid.keys() if k in done]


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float
    max: float


@dataclass(frozen=True)
class CellSummary:
    accuracy: MetricSummary
    f1: MetricSummary
    auc: MetricSummary
    count: int
    failed: int = 0


def summarize(records: Iterable[ExperimentRecord]) -> dict[tuple[str, str, str], CellSummary]:
    """Mean, population std and max of each metric per ``(loss, arch, regime)``.

    Failed runs are excluded from the statistics but counted.
    """
    cells: dict[tuple[str, str, str], list[ExperimentRecord]] = {}
    for r in records:
        cells.setdefault((r.loss, r.arch, r.regime), []).append(r)
    out = {}
    for key in sorted(cells, key=_cell_order):
        ok = sorted((r for r in cells[key] if r.ok), key=lambda r: r.seed)
        failed = len(cells[key]) - len(ok)
        if not ok:
            log.warning("cell %s has no successful runs (%d failed); omitted", key, failed)
            continue
        stats = {}
        for m in METRICS:
            v = np.array([getattr(r, m) for r in ok], dtype=np.float64)
            v = v[np.isfinite(v)]
            stats[m] = MetricSummary(float(v.mean()), float(v.std()), float(v.max())) if v.size else \
                MetricSummary(float("nan"), float("nan"), float("nan"))
        out[key] = CellSummary(count=len(ok), failed=failed, **stats)
    return out


def _cell_order(key):
    loss, arch, regime = key
    kinds = [k.value for k in LOSS_ORDER]
    regimes = [r.value for r in Regime]
    return (
        regimes.index(regime) if regime in regimes else len(regimes),
        kinds.index(loss) if loss in kinds else len(kinds),
        parse_arch_label(arch),
        loss,
    )


def grand_mean(records: Iterable[ExperimentRecord], metric: str = "accuracy", regime: str | None = None,
               losses: Sequence[str] | None = None) -> float:
    vals = [getattr(r, metric) for r in records
            if r.ok and (regime is None or r.regime == regime) and (losses is None or r.loss in losses)]
    return float(np.mean(vals)) if vals else float("nan")


_REGIME_TITLES = {"ff": "Forward-forward", "bp": "Backpropagation"}
_TABLE_HEAD = ["Method", "Accuracy (%) mean (std)", "Accuracy (%) max", "F1 mean (std)", "F1 max",
               "AUC mean (std)", "AUC max", "runs", "failed"]
_CSV_HEAD = ["regime", "loss", "arch", "runs", "failed",
             "accuracy_mean", "accuracy_std", "accuracy_max", "f1_mean", "f1_std", "f1_max",
             "auc_mean", "auc_std", "auc_max"]


def _method_label(loss: str, arch: str) -> str:
    try:
        name = LossKind(loss).label
    except ValueError:
        name = loss
    return f"{name} ({','.join(str(a) for a in parse_arch_label(arch))})"


def _fmt(v: float, digits: int | None) -> str:
    if digits is None:
        return repr(float(v))
    return f"{v:.{digits}f}"


def _pretty_cells(cell: CellSummary) -> list[str]:
    a, f, u = cell.accuracy, cell.f1, cell.auc
    return [
        f"{_fmt(100 * a.mean, 2)} (± {_fmt(100 * a.std, 2)})", _fmt(100 * a.max, 2),
        f"{_fmt(f.mean, 4)} (± {_fmt(f.std, 4)})", _fmt(f.max, 4),
        f"{_fmt(u.mean, 4)} (± {_fmt(u.std, 4)})", _fmt(u.max, 4),
        str(cell.count), str(cell.failed),
    ]


def emit_tables(summaries: dict, fmt: str = "markdown") -> str:
    """Render summaries shaped like the published results tables.

    ``csv`` carries full-precision numbers (accuracy as a fraction) with a
    regime column; ``markdown`` and ``latex`` give one table per regime with
    accuracy in percent, rounded from the same values.
    """
    keys = sorted(summaries, key=_cell_order)
    if fmt == "csv":
        lines = [",".join(_CSV_HEAD)]
        for k in keys:
            c = summaries[k]
            nums = [_fmt(getattr(getattr(c, m), s), None) for m in METRICS for s in ("mean", "std", "max")]
            lines.append(",".join([k[2], k[0], k[1], str(c.count), str(c.failed)] + nums))
        return "\n".join(lines) + "\n"

    regimes = []
    for k in keys:
        if k[2] not in regimes:
            regimes.append(k[2])

    if fmt == "markdown":
        def table(rows):
            out = ["| " + " | ".join(_TABLE_HEAD) + " |", "|" + "---|" * len(_TABLE_HEAD)]
            out += ["| " + " | ".join(r) + " |" for r in rows]
            return out

        if not regimes:
            return "\n".join(table([])) + "\n"
        lines = []
        for reg in regimes:
            lines += [f"### {_REGIME_TITLES.get(reg, reg)}", ""]
            lines += table([[_method_label(k[0], k[1])] + _pretty_cells(summaries[k]) for k in keys if k[2] == reg])
            lines.append("")
        return "\n".join(lines)

    if fmt == "latex":
        def table(rows, caption):
            out = [r"\begin{table}[H]", r"\centering", r"\begin{tabular}{|c|cc|cc|cc|cc|}", r"\hline",
                   r" & \multicolumn{2}{c|}{Accuracy (\%)} & \multicolumn{2}{c|}{F1} & \multicolumn{2}{c|}{AUC}"
                   r" & \multicolumn{2}{c|}{Runs} \\",
                   r"Method & $\mu (\pm \sigma)$ & $\max$ & $\mu (\pm \sigma)$ & $\max$ & $\mu (\pm \sigma)$"
                   r" & $\max$ & ok & failed \\ \hline"]
            prev = None
            for loss, cells in rows:
                if prev is not None and loss != prev:
                    out.append(r"\hline")
                prev = loss
                out.append(" & ".join(c.replace("±", r"$\pm$") for c in cells) + r" \\")
            out += [r"\hline", r"\end{tabular}"]
            if caption:
                out.append(rf"\caption{{{caption}}}")
            out.append(r"\end{table}")
            return out

        if not regimes:
            return "\n".join(table([], None)) + "\n"
        lines = []
        for reg in regimes:
            rows = [(k[0], [_method_label(k[0], k[1])] + _pretty_cells(summaries[k])) for k in keys if k[2] == reg]
            lines += table(rows, f"{_REGIME_TITLES.get(reg, reg)}: results across seeds.")
            lines.append("")
        return "\n".join(lines)

    raise ValueError(f"unknown table format {fmt!r}")
