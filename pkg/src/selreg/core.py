"""Shared domain types: datasets, splits, cost configuration, model interfaces.

Everything here is an immutable value.  Fitted models, calibrators and
datasets can be shared freely across threads; all fitting happens elsewhere
and returns new objects.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

__all__ = [
    "SelregError",
    "DataError",
    "EmptyDatasetError",
    "EmptySplitError",
    "EmptyValidationError",
    "EmptyScoresError",
    "UnsupportedTaskError",
    "KTooLargeError",
    "NonFiniteLossError",
    "PremiseViolatedError",
    "SupportTooLargeError",
    "CostMode",
    "CostConfig",
    "Dataset",
    "SplitSpec",
    "ScalingParams",
    "KernelSpec",
    "RngHandle",
    "Regressor",
    "Rejector",
    "Calibrator",
    "ConstantRegressor",
    "TableLookupRegressor",
    "ConstantRejector",
    "TableLookupRejector",
    "split_dataset",
    "standardize",
    "model_to_json",
    "model_from_json",
    "STREAM_SPLIT",
    "STREAM_SAMPLE",
    "STREAM_MLP",
    "STREAM_VERIFY",
    "STREAM_SCORES",
]


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class SelregError(Exception):
    """Base error for the package."""


class DataError(SelregError):
    """Input data violates a contract."""


class EmptyDatasetError(DataError):
    pass


class EmptySplitError(DataError):
    """A requested split fraction rounds to zero rows."""


class EmptyValidationError(DataError):
    pass


class EmptyScoresError(DataError):
    pass


class UnsupportedTaskError(SelregError):
    """The synthetic task does not expose the closed form needed here."""


class KTooLargeError(SelregError):
    pass


class NonFiniteLossError(SelregError):
    """Training diverged; usually a learning-rate misconfiguration."""


class PremiseViolatedError(SelregError):
    """A construction's premise on the task (e.g. variance range) fails."""


class SupportTooLargeError(SelregError):
    """Exhaustive enumeration is infeasible for this support size."""


# ---------------------------------------------------------------------------
# Randomness control
# ---------------------------------------------------------------------------

# Named streams so that independent consumers of the same master seed never
# share a draw sequence.
STREAM_SPLIT = 1
STREAM_SAMPLE = 2
STREAM_MLP = 3
STREAM_VERIFY = 4
STREAM_SCORES = 5


@dataclass(frozen=True)
class RngHandle:
    """Seedable, stream-separated source of randomness.

    Identical (seed, stream_id) pairs yield identical draw sequences across
    runs and platforms (PCG64 via a spawned SeedSequence).
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.default_rng(ss)


# ---------------------------------------------------------------------------
# Datasets and splits
# ---------------------------------------------------------------------------


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True, order="C")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix [n, d] plus target vector [n]; validated and immutable."""

    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {feats.shape}")
        targs = np.asarray(self.targets, dtype=np.float64)
        if targs.ndim != 1:
            raise DataError(f"targets must be 1-D, got shape {targs.shape}")
        n, d = feats.shape
        if n < 1 or d < 1:
            raise EmptyDatasetError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        if targs.shape[0] != n:
            raise DataError(f"row mismatch: {n} feature rows vs {targs.shape[0]} targets")
        if not np.all(np.isfinite(feats)) or not np.all(np.isfinite(targs)):
            raise DataError("NaN/Inf entries are not allowed after ingestion")
        if self.feature_names is not None and len(self.feature_names) != d:
            raise DataError("feature_names length must equal feature count")
        object.__setattr__(self, "features", _freeze(feats))
        object.__setattr__(self, "targets", _freeze(targs))
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.features[idx], self.targets[idx], self.feature_names)


@dataclass(frozen=True)
class SplitSpec:
    """Train/validation/test fractions plus the permutation seed."""

    train_fraction: float = 0.7
    val_fraction: float = 0.2
    test_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        fracs = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(not 0.0 < f < 1.0 for f in fracs):
            raise ValueError(f"fractions must lie in (0,1), got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1, got {sum(fracs)!r}")


def split_dataset(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Disjoint row partition into (train, val, test).

    Sizes are floor allocations of the fractions; remainder rows go to train
    (the regressor is fitted on all of them, so train gets the extras).  The
    permutation is fully determined by ``spec.seed``.
    """
    n = data.n
    if n < 3:
        raise EmptySplitError(f"need n >= 3 to populate three splits, got n={n}")
    n_train = int(np.floor(n * spec.train_fraction))
    n_val = int(np.floor(n * spec.val_fraction))
    n_test = int(np.floor(n * spec.test_fraction))
    n_train += n - (n_train + n_val + n_test)
    if min(n_train, n_val, n_test) == 0:
        raise EmptySplitError(
            f"split sizes ({n_train},{n_val},{n_test}) contain an empty split for n={n}"
        )
    perm = RngHandle(spec.seed, STREAM_SPLIT).generator().permutation(n)
    i_train = perm[:n_train]
    i_val = perm[n_train : n_train + n_val]
    i_test = perm[n_train + n_val :]
    return data.subset(i_train), data.subset(i_val), data.subset(i_test)


@dataclass(frozen=True)
class ScalingParams:
    """Per-column statistics of the training split (sample std, ddof=1).

    Columns with zero variance are passed through unscaled and flagged in
    ``degenerate``.  When targets were scaled, target_std holds the factor.
    """

    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray
    target_mean: float | None = None
    target_std: float | None = None

    def transform(self, data: Dataset) -> Dataset:
        feats = (data.features - self.mean) / self.std
        targs = data.targets
        if self.target_mean is not None:
            targs = (targs - self.target_mean) / self.target_std
        return Dataset(feats, targs, data.feature_names)


def standardize(
    train: Dataset, others: Sequence[Dataset] = (), *, targets: bool = False
) -> tuple[Dataset, list[Dataset], ScalingParams]:
    """Z-score features (and optionally targets) on train statistics only.

    The other datasets are transformed with the train mean/std — never their
    own — so no information leaks across splits.
    """
    if train.n < 2:
        raise DataError("standardize needs at least 2 training rows")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0, ddof=1)
    degenerate = std == 0.0
    mean = np.where(degenerate, 0.0, mean)
    std = np.where(degenerate, 1.0, std)
    t_mean = t_std = None
    if targets:
        t_mean = float(train.targets.mean())
        t_std = float(train.targets.std(ddof=1))
        if t_std == 0.0:
            t_mean, t_std = 0.0, 1.0
    params = ScalingParams(mean, std, degenerate, t_mean, t_std)
    return params.transform(train), [params.transform(d) for d in others], params


# ---------------------------------------------------------------------------
# Cost configuration
# ---------------------------------------------------------------------------


class CostMode(Enum):
    FIXED_COST = "cost"
    FIXED_BUDGET = "budget"


@dataclass(frozen=True)
class CostConfig:
    """Either a deferral cost c (same units as squared target error) or a
    maximum rejection fraction gamma."""

    mode: CostMode
    cost_c: float = 0.0
    budget_gamma: float = 0.0

    def __post_init__(self) -> None:
        if self.mode is CostMode.FIXED_COST and not self.cost_c > 0.0:
            raise ValueError("fixed-cost mode requires cost_c > 0")
        if self.mode is CostMode.FIXED_BUDGET and not 0.0 < self.budget_gamma < 1.0:
            raise ValueError("fixed-budget mode requires budget_gamma in (0,1)")

    @classmethod
    def fixed_cost(cls, c: float) -> "CostConfig":
        return cls(CostMode.FIXED_COST, cost_c=float(c))

    @classmethod
    def fixed_budget(cls, gamma: float) -> "CostConfig":
        return cls(CostMode.FIXED_BUDGET, budget_gamma=float(gamma))


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian RBF kernel k(x, x') = exp(-||x - x'||^2 / sigma).

    ``bandwidth_grid`` is the candidate set searched during bandwidth
    selection; the default spans seven decades.
    """

    length_scale_sigma: float = 1.0
    bandwidth_grid: tuple[float, ...] = tuple(10.0**j for j in range(-3, 4))
    family: str = "gaussian_rbf"

    def __post_init__(self) -> None:
        if not self.length_scale_sigma > 0.0:
            raise ValueError("length_scale_sigma must be positive")
        if len(self.bandwidth_grid) == 0 or any(s <= 0.0 for s in self.bandwidth_grid):
            raise ValueError("bandwidth_grid must be nonempty and strictly positive")
        if self.family != "gaussian_rbf":
            raise ValueError(f"unknown kernel family {self.family!r}")

    def with_sigma(self, sigma: float) -> "KernelSpec":
        return KernelSpec(float(sigma), self.bandwidth_grid, self.family)


# ---------------------------------------------------------------------------
# Model interfaces
# ---------------------------------------------------------------------------


class Regressor(ABC):
    """Fitted predictor f: X -> Y.  Immutable; predict is pure."""

    kind: str = "abstract"

    @abstractmethod
    def predict(self, X: np.ndarray) -> np.ndarray:
        """Vectorized prediction for an [n, d] feature block."""

    def predict_one(self, x: np.ndarray) -> float:
        return float(self.predict(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0])

    def payload(self) -> dict:
        raise NotImplementedError(f"{self.kind} models are not serializable")


class Rejector(ABC):
    """Binary accept/defer rule: 1 = accept (machine predicts), 0 = defer."""

    kind: str = "abstract"

    @abstractmethod
    def accept(self, X: np.ndarray) -> np.ndarray:
        """Vectorized {0,1} decision for an [n, d] feature block."""

    def payload(self) -> dict:
        raise NotImplementedError(f"{self.kind} rejectors are not serializable")


class Calibrator(ABC):
    """Estimator of the conditional squared-error risk of a fixed regressor.

    Estimates are clamped at 0; rejectors are derived by thresholding.
    """

    kind: str = "abstract"

    @abstractmethod
    def estimate(self, X: np.ndarray) -> np.ndarray:
        """Vectorized nonnegative risk estimate for an [n, d] feature block."""

    def payload(self) -> dict:
        raise NotImplementedError(f"{self.kind} calibrators are not serializable")


def _as_block(X: np.ndarray) -> np.ndarray:
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim == 1:
        X = X[:, None]
    return X


class ConstantRegressor(Regressor):
    kind = "constant"

    def __init__(self, value: float):
        self.value = float(value)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.full(_as_block(X).shape[0], self.value)

    def payload(self) -> dict:
        return {"value": self.value}


class TableLookupRegressor(Regressor):
    """Explicit x -> value map on a finite support; exact on discrete tasks.

    Queries off the support resolve to the nearest support point (ties by
    ascending row index), which makes the model total while staying exact
    wherever it is actually used.
    """

    kind = "table_lookup"

    def __init__(self, points: np.ndarray, values: np.ndarray):
        self.points = _freeze(_as_block(points))
        self.values = _freeze(np.asarray(values, dtype=np.float64))
        if self.points.shape[0] != self.values.shape[0]:
            raise DataError("points/values length mismatch")

    def _nearest(self, X: np.ndarray) -> np.ndarray:
        from .backend import pairwise_sq_dists

        return np.argmin(pairwise_sq_dists(_as_block(X), self.points), axis=1)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.values[self._nearest(X)]

    def with_values(self, values: np.ndarray) -> "TableLookupRegressor":
        return TableLookupRegressor(self.points, values)

    def payload(self) -> dict:
        return {"points": self.points.tolist(), "values": self.values.tolist()}

    @staticmethod
    def from_payload(payload: dict) -> "TableLookupRegressor":
        return TableLookupRegressor(np.array(payload["points"]), np.array(payload["values"]))


class ConstantRejector(Rejector):
    kind = "constant"

    def __init__(self, value: int):
        if value not in (0, 1):
            raise ValueError("rejector output must be 0 or 1")
        self.value = int(value)

    def accept(self, X: np.ndarray) -> np.ndarray:
        return np.full(_as_block(X).shape[0], self.value, dtype=np.int64)

    def payload(self) -> dict:
        return {"value": self.value}


class TableLookupRejector(Rejector):
    """Explicit x -> {0,1} map on a finite support (nearest-point lookup)."""

    kind = "table_lookup"

    def __init__(self, points: np.ndarray, accepts: np.ndarray):
        accepts = np.asarray(accepts)
        if not np.all((accepts == 0) | (accepts == 1)):
            raise ValueError("accepts must be 0/1")
        self._table = TableLookupRegressor(points, accepts.astype(np.float64))

    @property
    def points(self) -> np.ndarray:
        return self._table.points

    @property
    def accepts(self) -> np.ndarray:
        return self._table.values.astype(np.int64)

    def accept(self, X: np.ndarray) -> np.ndarray:
        return self._table.predict(X).astype(np.int64)

    def payload(self) -> dict:
        return {"points": self.points.tolist(), "accepts": self.accepts.tolist()}

    @staticmethod
    def from_payload(payload: dict) -> "TableLookupRejector":
        return TableLookupRejector(np.array(payload["points"]), np.array(payload["accepts"]))


# ---------------------------------------------------------------------------
# Self-describing JSON serialization (kind tag + payload)
# ---------------------------------------------------------------------------

_MODEL_REGISTRY: dict[str, type] = {}


def register_model(tag: str):
    def deco(cls):
        _MODEL_REGISTRY[tag] = cls
        cls.json_tag = tag
        return cls

    return deco


register_model("regressor/constant")(ConstantRegressor)
register_model("regressor/table_lookup")(TableLookupRegressor)
register_model("rejector/constant")(ConstantRejector)
register_model("rejector/table_lookup")(TableLookupRejector)


def model_to_json(model) -> str:
    tag = getattr(model, "json_tag", None)
    if tag is None:
        raise SelregError(f"{type(model).__name__} is not registered for serialization")
    return json.dumps({"kind": tag, "payload": model.payload()}, sort_keys=True)


def model_from_json(doc: str):
    obj = json.loads(doc)
    tag = obj.get("kind")
    if tag not in _MODEL_REGISTRY:
        raise SelregError(f"unknown model kind {tag!r}")
    cls = _MODEL_REGISTRY[tag]
    if hasattr(cls, "from_payload"):
        return cls.from_payload(obj["payload"])
    return cls(**obj["payload"])
