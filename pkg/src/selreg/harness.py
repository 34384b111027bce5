"""Experiment orchestration: data ingestion, repeated fixed-cost and
fixed-budget runs, and report emission.

Per-repeat seeds are master_seed + repeat_index on named streams, so every
table is exactly reproducible from its config echo.  CSV targets are
z-scored on train statistics so that deferral costs are comparable across
datasets; synthetic tasks are left in their native units because their
population optima are stated there.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import (
    CostConfig,
    CostMode,
    DataError,
    Dataset,
    KernelSpec,
    RngHandle,
    STREAM_MLP,
    STREAM_SAMPLE,
    SelregError,
    SplitSpec,
    TableLookupRegressor,
    standardize,
)
from .losses import LossReport, empirical_rwr_loss
from .models import KnnConfig, MlpConfig, fit_knn_auto, fit_mlp
from .rejection import (
    conformal_threshold,
    induce_rejector,
    kernel_calibrate,
    linear_calibrate,
    select_bandwidth,
)
from .tasks import OracleRiskCalibrator, get_task

__all__ = [
    "MissingTargetError",
    "CsvParseError",
    "EmptyAfterFilteringError",
    "ReportIoError",
    "ExperimentConfig",
    "RunReport",
    "load_csv",
    "run_experiment",
    "run_fixed_cost",
    "run_fixed_budget",
    "emit_report",
    "bundled_data_path",
]

log = logging.getLogger(__name__)

REJECTOR_KINDS = ("kernel", "loss-linear", "conformal", "oracle")
REGRESSOR_KINDS = ("knn", "mlp", "oracle")


class MissingTargetError(DataError):
    pass


class CsvParseError(DataError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyAfterFilteringError(DataError):
    pass


class ReportIoError(SelregError):
    pass


def load_csv(path: str | Path, target_column: str) -> Dataset:
    """Parse a headered numeric CSV into a Dataset.

    Rows containing non-numeric or missing cells are dropped with a
    row-indexed diagnostic on the module logger; structural problems
    (no header, wrong field count) raise CsvParseError.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CsvParseError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvParseError(f"{path}: empty file, header row required") from None
    header = [h.strip() for h in header]
    if target_column not in header:
        raise MissingTargetError(f"{path}: target column {target_column!r} not in header {header}")
    t_idx = header.index(target_column)
    f_idx = [i for i in range(len(header)) if i != t_idx]

    feats, targs = [], []
    n_dropped = 0
    for row_no, row in enumerate(reader, start=1):
        if len(row) != len(header):
            raise CsvParseError(
                f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}",
                row=row_no,
            )
        try:
            values = [float(cell) for cell in row]
            if not all(np.isfinite(values)):
                raise ValueError("non-finite value")
        except ValueError:
            bad = next(
                (header[i] for i, cell in enumerate(row) if not _is_number(cell)),
                header[0],
            )
            log.warning("%s: dropping row %d (non-numeric cell in column %r)", path, row_no, bad)
            n_dropped += 1
            continue
        feats.append([values[i] for i in f_idx])
        targs.append(values[t_idx])
    if not feats:
        raise EmptyAfterFilteringError(f"{path}: no usable rows ({n_dropped} dropped)")
    names = tuple(header[i] for i in f_idx)
    return Dataset(np.array(feats), np.array(targs), names)


def _is_number(cell: str) -> bool:
    try:
        return bool(np.isfinite(float(cell)))
    except ValueError:
        return False


def bundled_data_path(name: str) -> Path:
    """Path of a CSV shipped inside the package (tests never touch the
    network)."""
    p = Path(__file__).parent / "data" / name
    if not p.exists():
        raise CsvParseError(f"no bundled dataset named {name!r}")
    return p


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one benchmark row.

    dataset_source is a CSV path or a synthetic task name ("hetero6",
    "smooth1d").  calibrate_on controls whether the rejector sees the
    validation split (default; keeps calibration data disjoint from the
    regressor's) or the training split.  workers > 1 runs the repeats on a
    thread pool; per-repeat seeding makes the result identical either way.
    """

    dataset_source: str
    cost_config: CostConfig
    regressor: KnnConfig | MlpConfig | str = field(default_factory=KnnConfig)
    rejector: str = "kernel"
    split: SplitSpec = field(default_factory=SplitSpec)
    repeats: int = 10
    seed: int = 0
    target_column: str = "target"
    synthetic_n: int = 1000
    standardize_data: bool | None = None  # None: CSV yes, synthetic no
    calibrate_on: str = "validation"
    kernel: KernelSpec = field(default_factory=KernelSpec)
    output_dir: str = "."
    workers: int = 1

    def __post_init__(self) -> None:
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.rejector not in REJECTOR_KINDS:
            raise ValueError(f"rejector must be one of {REJECTOR_KINDS}")
        if isinstance(self.regressor, str) and self.regressor not in REGRESSOR_KINDS:
            raise ValueError(f"regressor must be one of {REGRESSOR_KINDS}")
        if self.calibrate_on not in ("validation", "train"):
            raise ValueError("calibrate_on must be 'validation' or 'train'")

    @property
    def is_synthetic(self) -> bool:
        return not self.dataset_source.endswith(".csv")

    @property
    def should_standardize(self) -> bool:
        if self.standardize_data is None:
            return not self.is_synthetic
        return self.standardize_data

    def method_name(self) -> str:
        reg = self.regressor if isinstance(self.regressor, str) else (
            "knn" if isinstance(self.regressor, KnnConfig) else "mlp"
        )
        return f"{reg}+{self.rejector}"

    def to_dict(self) -> dict:
        reg = self.regressor
        if isinstance(reg, KnnConfig):
            reg_doc = {"kind": "knn", "k": reg.k, "k_grid": list(reg.k_grid)}
        elif isinstance(reg, MlpConfig):
            reg_doc = {
                "kind": "mlp",
                "hidden_width": reg.hidden_width,
                "learning_rate": reg.learning_rate,
                "weight_decay": reg.weight_decay,
                "batch_size": reg.batch_size,
                "epochs": reg.epochs,
            }
        else:
            reg_doc = {"kind": reg}
        return {
            "dataset_source": self.dataset_source,
            "mode": self.cost_config.mode.value,
            "cost_c": self.cost_config.cost_c,
            "budget_gamma": self.cost_config.budget_gamma,
            "regressor": reg_doc,
            "rejector": self.rejector,
            "split": {
                "train_fraction": self.split.train_fraction,
                "val_fraction": self.split.val_fraction,
                "test_fraction": self.split.test_fraction,
                "seed": self.split.seed,
            },
            "repeats": self.repeats,
            "seed": self.seed,
            "target_column": self.target_column,
            "synthetic_n": self.synthetic_n,
            "standardize_data": self.standardize_data,
            "calibrate_on": self.calibrate_on,
            "sigma_grid": list(self.kernel.bandwidth_grid),
            "output_dir": self.output_dir,
            "workers": self.workers,
        }

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentConfig":
        mode = CostMode(doc["mode"])
        cost = CostConfig(mode, cost_c=doc["cost_c"], budget_gamma=doc["budget_gamma"])
        reg_doc = doc["regressor"]
        if reg_doc["kind"] == "knn" and "k" in reg_doc:
            reg = KnnConfig(k=reg_doc["k"], k_grid=tuple(reg_doc["k_grid"]))
        elif reg_doc["kind"] == "mlp" and "hidden_width" in reg_doc:
            reg = MlpConfig(
                hidden_width=reg_doc["hidden_width"],
                learning_rate=reg_doc["learning_rate"],
                weight_decay=reg_doc["weight_decay"],
                batch_size=reg_doc["batch_size"],
                epochs=reg_doc["epochs"],
            )
        else:
            reg = reg_doc["kind"]
        return ExperimentConfig(
            dataset_source=doc["dataset_source"],
            cost_config=cost,
            regressor=reg,
            rejector=doc["rejector"],
            split=SplitSpec(**doc["split"]),
            repeats=doc["repeats"],
            seed=doc["seed"],
            target_column=doc["target_column"],
            synthetic_n=doc["synthetic_n"],
            standardize_data=doc["standardize_data"],
            calibrate_on=doc["calibrate_on"],
            kernel=KernelSpec(bandwidth_grid=tuple(doc["sigma_grid"])),
            output_dir=doc["output_dir"],
            workers=doc.get("workers", 1),
        )


@dataclass(frozen=True)
class RunReport:
    """Aggregated result of one repeated experiment.

    Equality ignores wall_clock_s so that identically seeded reruns compare
    equal; everything else is deterministic.
    """

    dataset: str
    mode: str
    c_or_gamma: float
    method: str
    repeats: tuple[LossReport, ...]
    rwr_mean: float
    rwr_std: float
    machine_mean: float
    machine_std: float
    rej_mean: float
    rej_std: float
    config: dict
    seed_ledger: tuple[int, ...]
    wall_clock_s: float = field(compare=False, default=0.0)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "mode": self.mode,
            "c_or_gamma": self.c_or_gamma,
            "method": self.method,
            "repeats": [json.loads(r.to_json()) for r in self.repeats],
            "rwr_mean": self.rwr_mean,
            "rwr_std": self.rwr_std,
            "machine_mean": self.machine_mean,
            "machine_std": self.machine_std,
            "rej_mean": self.rej_mean,
            "rej_std": self.rej_std,
            "config": self.config,
            "seed_ledger": list(self.seed_ledger),
            "wall_clock_s": self.wall_clock_s,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @staticmethod
    def from_dict(doc: dict) -> "RunReport":
        return RunReport(
            dataset=doc["dataset"],
            mode=doc["mode"],
            c_or_gamma=doc["c_or_gamma"],
            method=doc["method"],
            repeats=tuple(LossReport(**r) for r in doc["repeats"]),
            rwr_mean=doc["rwr_mean"],
            rwr_std=doc["rwr_std"],
            machine_mean=doc["machine_mean"],
            machine_std=doc["machine_std"],
            rej_mean=doc["rej_mean"],
            rej_std=doc["rej_std"],
            config=doc["config"],
            seed_ledger=tuple(doc["seed_ledger"]),
            wall_clock_s=doc["wall_clock_s"],
        )

    @staticmethod
    def from_json(doc: str) -> "RunReport":
        return RunReport.from_dict(json.loads(doc))


def _std(values: np.ndarray) -> float:
    return float(values.std(ddof=1)) if values.size > 1 else 0.0


def _aggregate(
    cfg: ExperimentConfig, reports: list[LossReport], seeds: list[int], t0: float
) -> RunReport:
    rwr = np.array([r.rwr_loss for r in reports])
    mach = np.array([r.machine_loss for r in reports])
    rej = np.array([r.rejection_rate for r in reports])
    cc = cfg.cost_config
    return RunReport(
        dataset=cfg.dataset_source,
        mode=cc.mode.value,
        c_or_gamma=cc.cost_c if cc.mode is CostMode.FIXED_COST else cc.budget_gamma,
        method=cfg.method_name(),
        repeats=tuple(reports),
        rwr_mean=float(rwr.mean()),
        rwr_std=_std(rwr),
        machine_mean=float(mach.mean()),
        machine_std=_std(mach),
        rej_mean=float(rej.mean()),
        rej_std=_std(rej),
        config=cfg.to_dict(),
        seed_ledger=tuple(seeds),
        wall_clock_s=time.perf_counter() - t0,
    )


def _materialize(cfg: ExperimentConfig, repeat_seed: int):
    """(train, val, test, task-or-None) for one repeat."""
    if cfg.is_synthetic:
        task = get_task(cfg.dataset_source)
        data = task.sample(cfg.synthetic_n, RngHandle(repeat_seed, STREAM_SAMPLE))
    else:
        task = None
        data = load_csv(cfg.dataset_source, cfg.target_column)
    train, val, test = (
        data.subset(idx)
        for idx in _split_indices(data.n, replace(cfg.split, seed=repeat_seed))
    )
    if cfg.should_standardize:
        train, (val, test), _ = standardize(train, [val, test], targets=True)
    return train, val, test, task


def _split_indices(n: int, spec: SplitSpec):
    # reuse split_dataset's arithmetic by splitting an index column
    from .core import split_dataset

    dummy = Dataset(np.arange(n, dtype=float)[:, None], np.zeros(n))
    tr, va, te = split_dataset(dummy, spec)
    return (
        tr.features[:, 0].astype(int),
        va.features[:, 0].astype(int),
        te.features[:, 0].astype(int),
    )


def _fit_regressor(cfg: ExperimentConfig, train: Dataset, val: Dataset, task, repeat_seed: int):
    reg = cfg.regressor
    if isinstance(reg, str):
        if reg == "oracle":
            if task is None:
                raise SelregError("the oracle regressor needs a synthetic task source")
            points, _ = task.eval_points()
            return TableLookupRegressor(points, task.mean_at(points))
        reg = KnnConfig() if reg == "knn" else MlpConfig()
    if isinstance(reg, KnnConfig):
        return fit_knn_auto(train, val, reg)
    mlp_cfg = replace(reg, init_seed=RngHandle(repeat_seed, STREAM_MLP))
    return fit_mlp(train, mlp_cfg)


def _build_calibrator(cfg: ExperimentConfig, f, cal_data: Dataset, task, c_for_selection: float):
    if cfg.rejector in ("kernel", "conformal"):
        half = cal_data.n // 2
        inner = cal_data.subset(np.arange(half)) if half >= 1 else cal_data
        outer = cal_data.subset(np.arange(half, cal_data.n)) if cal_data.n - half >= 1 else cal_data
        spec = select_bandwidth(f, inner, outer, cfg.kernel, c_for_selection)
        return kernel_calibrate(f, cal_data, spec)
    if cfg.rejector == "loss-linear":
        return linear_calibrate(f, cal_data)
    if cfg.rejector == "oracle":
        if task is None:
            raise SelregError("the oracle rejector needs a synthetic task source")
        return OracleRiskCalibrator(task, f)
    raise SelregError(f"unknown rejector kind {cfg.rejector!r}")


def _run_repeats(cfg: ExperimentConfig, one_repeat) -> tuple[list[LossReport], list[int]]:
    """Run the repeats sequentially or on a thread pool; every repeat owns
    its derived seed, so the two execution modes produce identical results.
    A failing repeat aborts the whole run with its index and seed attached."""
    seeds = [cfg.seed + i for i in range(cfg.repeats)]

    def guarded(i: int) -> LossReport:
        try:
            return one_repeat(seeds[i])
        except Exception as exc:
            exc.args = (f"repeat {i} (seed {seeds[i]}) failed: {exc}",)
            raise
    if cfg.workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            reports = list(pool.map(guarded, range(cfg.repeats)))
    else:
        reports = [guarded(i) for i in range(cfg.repeats)]
    return reports, seeds


def run_fixed_cost(cfg: ExperimentConfig) -> RunReport:
    """Split, fit on all training rows, calibrate on held-out data, threshold
    at the deferral cost, evaluate on test; repeated with derived seeds."""
    if cfg.cost_config.mode is not CostMode.FIXED_COST:
        raise ValueError("run_fixed_cost needs a fixed-cost config")
    c = cfg.cost_config.cost_c
    t0 = time.perf_counter()

    def one_repeat(repeat_seed: int) -> LossReport:
        train, val, test, task = _materialize(cfg, repeat_seed)
        f = _fit_regressor(cfg, train, val, task, repeat_seed)
        cal_data = val if cfg.calibrate_on == "validation" else train
        calibrator = _build_calibrator(cfg, f, cal_data, task, c)
        return empirical_rwr_loss(f, induce_rejector(calibrator, c), test, c)

    reports, seeds = _run_repeats(cfg, one_repeat)
    return _aggregate(cfg, reports, seeds, t0)


def run_fixed_budget(cfg: ExperimentConfig) -> RunReport:
    """Fit, score held-out data, take the conformal acceptance threshold for
    the budget, evaluate machine loss and rejection rate on test.

    The scores that feed the threshold are computed on a half of the
    held-out split that the score function itself was not fitted on, keeping
    them independent of both the regressor and the calibrator.
    """
    if cfg.cost_config.mode is not CostMode.FIXED_BUDGET:
        raise ValueError("run_fixed_budget needs a fixed-budget config")
    gamma = cfg.cost_config.budget_gamma
    t0 = time.perf_counter()

    def one_repeat(repeat_seed: int) -> LossReport:
        train, val, test, task = _materialize(cfg, repeat_seed)
        f = _fit_regressor(cfg, train, val, task, repeat_seed)
        half = val.n // 2
        fit_part = val.subset(np.arange(half)) if half >= 1 else val
        score_part = val.subset(np.arange(half, val.n)) if val.n - half >= 1 else val
        if cfg.rejector == "oracle":
            calibrator = _build_calibrator(cfg, f, fit_part, task, 0.0)
        elif cfg.rejector == "loss-linear":
            calibrator = linear_calibrate(f, fit_part)
        else:
            # median length scale keeps the smoother in range without
            # consuming the score split
            sigma = _median_sq_dist(fit_part.features)
            calibrator = kernel_calibrate(f, fit_part, cfg.kernel.with_sigma(sigma))
        scores = calibrator.estimate(score_part.features)
        th = conformal_threshold(scores, gamma)
        return empirical_rwr_loss(f, th.rejector(calibrator), test, 0.0)

    reports, seeds = _run_repeats(cfg, one_repeat)
    return _aggregate(cfg, reports, seeds, t0)


def _median_sq_dist(X: np.ndarray) -> float:
    from .backend import pairwise_sq_dists

    d2 = pairwise_sq_dists(X, X)
    vals = d2[np.triu_indices(d2.shape[0], k=1)]
    med = float(np.median(vals)) if vals.size else 1.0
    return med if med > 0.0 else 1.0


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    if cfg.cost_config.mode is CostMode.FIXED_COST:
        return run_fixed_cost(cfg)
    return run_fixed_budget(cfg)


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

CSV_COLUMNS = (
    "dataset",
    "c_or_gamma",
    "method",
    "rwr_mean",
    "rwr_std",
    "rej_mean",
    "rej_std",
    "machine_mean",
    "machine_std",
)


def emit_report(report: RunReport, fmt: str, out_dir: str | Path, stem: str = "report") -> Path:
    """Write the report as JSON (full fidelity) or CSV (one table row).

    Output is byte-stable for identical reports: floats are emitted via repr
    and keys are sorted.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            path = out_dir / f"{stem}.json"
            path.write_text(report.to_json() + "\n")
        elif fmt == "csv":
            path = out_dir / f"{stem}.csv"
            row = [
                report.dataset,
                repr(report.c_or_gamma),
                report.method,
                repr(report.rwr_mean),
                repr(report.rwr_std),
                repr(report.rej_mean),
                repr(report.rej_std),
                repr(report.machine_mean),
                repr(report.machine_std),
            ]
            path.write_text(",".join(CSV_COLUMNS) + "\n" + ",".join(row) + "\n")
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise ReportIoError(f"cannot write report to {out_dir}: {exc}") from exc
    return path
