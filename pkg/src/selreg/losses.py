"""Loss functionals for regression with a reject option.

The combined loss of a regressor f and a binary rejector r at deferral cost
c is, per sample,

    l(f, r; x, y) = r(x) * (f(x) - y)^2 + (1 - r(x)) * c,

i.e. the machine pays its squared error where it accepts and a flat cost c
where it defers.  Population quantities are available exactly on synthetic
tasks through the bias-variance identity

    R(f, x) = E[(f(X) - Y)^2 | X = x] = (f(x) - f_bar(x))^2 + v(x),

which is what makes every inequality in the verification suite checkable to
machine precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import Dataset, EmptyDatasetError, Regressor, Rejector
from .tasks import SyntheticTask

__all__ = [
    "LossReport",
    "empirical_rwr_loss",
    "empirical_squared_loss",
    "risk_values",
    "oracle_rwr_risk",
    "truncated_loss",
    "squared_risk",
    "excess_losses",
]


@dataclass(frozen=True)
class LossReport:
    """One evaluation of a (regressor, rejector) pair on a dataset.

    machine_loss is the mean squared error over accepted samples only; when
    everything is deferred it is reported as 0.0 with all_deferred set.
    """

    rwr_loss: float
    machine_loss: float
    rejection_rate: float
    n_evaluated: int
    all_deferred: bool = False

    def to_json(self) -> str:
        return json.dumps(
            {
                "rwr_loss": self.rwr_loss,
                "machine_loss": self.machine_loss,
                "rejection_rate": self.rejection_rate,
                "n_evaluated": self.n_evaluated,
                "all_deferred": self.all_deferred,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(doc: str) -> "LossReport":
        return LossReport(**json.loads(doc))


def empirical_rwr_loss(
    f: Regressor, r: Rejector, data: Dataset, c: float
) -> LossReport:
    """Sample mean of r*(f-y)^2 + (1-r)*c, plus the accepted-only loss."""
    if c < 0.0:
        raise ValueError("deferral cost must be nonnegative")
    if data.n == 0:
        raise EmptyDatasetError("cannot evaluate on an empty dataset")
    sq = (f.predict(data.features) - data.targets) ** 2
    acc = r.accept(data.features).astype(np.float64)
    rwr = float(np.mean(acc * sq + (1.0 - acc) * c))
    n_acc = int(acc.sum())
    all_deferred = n_acc == 0
    machine = 0.0 if all_deferred else float(sq[acc == 1.0].mean())
    return LossReport(
        rwr_loss=rwr,
        machine_loss=machine,
        rejection_rate=float(1.0 - acc.mean()),
        n_evaluated=data.n,
        all_deferred=all_deferred,
    )


def empirical_squared_loss(f: Regressor, data: Dataset) -> float:
    if data.n == 0:
        raise EmptyDatasetError("cannot evaluate on an empty dataset")
    return float(np.mean((f.predict(data.features) - data.targets) ** 2))


def risk_values(f: Regressor, task: SyntheticTask) -> np.ndarray:
    """Exact conditional risk R(f, x) at the task's evaluation points."""
    points, _ = task.eval_points()
    bias = f.predict(points) - task.mean_at(points)
    return bias * bias + task.var_at(points)


def oracle_rwr_risk(f: Regressor, r: Rejector, task: SyntheticTask, c: float) -> float:
    """Exact E[r * R(f, X) + (1 - r) * c] by enumeration/quadrature.

    Evaluated as c + E[r * (R - c)] so the all-defer policy costs exactly c
    even when the weight vector cannot sum to 1.0 in floating point.
    """
    points, weights = task.eval_points()
    risk = risk_values(f, task)
    acc = r.accept(points).astype(np.float64)
    return float(c + np.dot(weights, acc * (risk - c)))


def truncated_loss(f: Regressor, task: SyntheticTask, c: float) -> float:
    """Exact E[min(R(f, X), c)].

    This is the combined risk of f under its own optimal rejector, hence a
    lower bound on oracle_rwr_risk(f, r, ., c) for every r.  Written as
    c + E[min(R - c, 0)], which matches oracle_rwr_risk term by term at the
    induced rejector.
    """
    _, weights = task.eval_points()
    return float(c + np.dot(weights, np.minimum(risk_values(f, task) - c, 0.0)))


def squared_risk(f: Regressor, task: SyntheticTask) -> float:
    """Exact E[(f(X) - Y)^2] = E[(f - f_bar)^2] + E[v]."""
    points, weights = task.eval_points()
    bias = f.predict(points) - task.mean_at(points)
    return float(np.dot(weights, bias * bias + task.var_at(points)))


def excess_losses(f: Regressor, task: SyntheticTask, c: float) -> tuple[float, float]:
    """(truncated excess, squared excess) of f over the conditional mean.

    Both minimizers over all measurable functions coincide with f_bar, so
    the excesses reduce to differences against the f_bar baseline:

        excess_truncated = E[min(R(f,X), c)] - E[min(v(X), c)]
        excess_squared   = E[(f - f_bar)^2]

    and the first never exceeds the second (squared loss is a surrogate for
    the truncated loss).
    """
    points, weights = task.eval_points()
    v = task.var_at(points)
    bias = f.predict(points) - task.mean_at(points)
    exc_trunc = float(np.dot(weights, np.minimum(bias * bias + v, c) - np.minimum(v, c)))
    exc_sq = float(np.dot(weights, bias * bias))
    return exc_trunc, exc_sq
