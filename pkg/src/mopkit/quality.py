"""Adequacy measures for fitted approximations.

Two families live here: in-sample determination measures (plain, explained
variance and squared correlation forms, plus the sample-size adjusted form)
and the prognosis measure computed on predictions for points withheld from
fitting, either by cross validation or by a single train/test split.

A *trainer* is any callable ``trainer(table, response) -> model`` whose
result exposes ``predict(points)``.  Models that expose a
``coefficient_count`` attribute (global polynomials) additionally get the
adjusted measure in their reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import make_partition
from .errors import (
    ConstantResponse,
    FoldUnderdetermined,
    InvalidPartition,
    Underdetermined,
)


def cod(y, y_hat):
    """1 minus residual sum of squares over total sum of squares."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.size < 2:
        raise ValueError("need two equal-length vectors of at least 2 entries")
    ss_tot = np.sum((y - y.mean()) ** 2)
    if ss_tot == 0:
        raise ConstantResponse("response has zero variance")
    return 1.0 - np.sum((y - y_hat) ** 2) / ss_tot


def cod_explained_variance(y, y_hat):
    """Explained-variance form; agrees with :func:`cod` for least-squares
    polynomial fits only."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    ss_tot = np.sum((y - y.mean()) ** 2)
    if ss_tot == 0:
        raise ConstantResponse("response has zero variance")
    return np.sum((y_hat - y.mean()) ** 2) / ss_tot


def cod_squared_correlation(y, y_hat):
    """Squared linear correlation between observed and predicted values.

    Diagnostic only; never used for model selection.
    """
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if np.std(y) == 0:
        raise ConstantResponse("response has zero variance")
    if np.std(y_hat) == 0:
        return 0.0
    return float(np.corrcoef(y, y_hat)[0, 1] ** 2)


def cod_adjusted(cod_value, n, p):
    """Penalize the determination measure by the coefficient count."""
    if n <= p:
        raise Underdetermined(p, n)
    return 1.0 - (n - 1) / (n - p) * (1.0 - cod_value)


@dataclass
class QualityReport:
    """Bundle of adequacy numbers plus the validation scheme behind them."""

    cop: float
    cod: float
    scheme: dict
    n: int
    cod_adjusted: float | None = None
    p: int | None = None
    unsuitable: bool = field(init=False)

    def __post_init__(self):
        # a non-positive prognosis coefficient marks the metamodel unusable
        self.unsuitable = not self.cop > 0.0

    def to_dict(self):
        out = {
            "cop": float(self.cop),
            "cod": float(self.cod),
            "scheme": self.scheme,
            "n": self.n,
            "unsuitable": self.unsuitable,
        }
        if self.cod_adjusted is not None:
            out["cod_adjusted"] = float(self.cod_adjusted)
        if self.p is not None:
            out["p"] = self.p
        return out


def _in_sample_numbers(table, response, trainer):
    model = trainer(table, response)
    y = table.response(response)
    cod_value = cod(y, model.predict(table.inputs))
    p = getattr(model, "coefficient_count", None)
    adjusted = None
    if p is not None and table.n > p:
        adjusted = cod_adjusted(cod_value, table.n, p)
    return cod_value, adjusted, p


def cop_cross_validation(table, response, trainer, q=5, seed=0):
    """Prognosis coefficient from q-fold cross validation.

    Every sample is predicted by the one model that never saw it; the pooled
    predictions enter the general determination formula against the pooled
    response mean.  Deterministic for a fixed seed.
    """
    y = table.response(response)
    n = table.n
    partition = make_partition(n, q, seed)
    pooled = np.empty(n)
    for label in range(q):
        held_out = partition.assignment == label
        training = table.take_rows(~held_out)
        try:
            model = trainer(training, response)
        except Underdetermined as exc:
            raise FoldUnderdetermined(label, exc) from exc
        pooled[held_out] = model.predict(table.inputs[held_out])

    cop = 1.0 - np.sum((y - pooled) ** 2) / np.sum((y - y.mean()) ** 2)
    cod_value, adjusted, p = _in_sample_numbers(table, response, trainer)
    return QualityReport(cop=cop, cod=cod_value, cod_adjusted=adjusted, p=p, n=n,
                         scheme={"kind": "cross_validation", "q": q, "seed": seed})


def cross_validation_predictions(table, response, trainer, q=5, seed=0):
    """Pooled held-out predictions, one per sample (same folds as the CoP)."""
    partition = make_partition(table.n, q, seed)
    pooled = np.empty(table.n)
    for label in range(q):
        held_out = partition.assignment == label
        model = trainer(table.take_rows(~held_out), response)
        pooled[held_out] = model.predict(table.inputs[held_out])
    return pooled


def cop_split(table, response, trainer, train_fraction, seed=0):
    """Prognosis coefficient from a single seeded train/test split.

    The determination formula is evaluated on the test part only, against
    the test-part mean.
    """
    if not 0.0 < train_fraction < 1.0:
        raise InvalidPartition(f"train_fraction={train_fraction} must lie in (0, 1)")
    n = table.n
    n_train = int(round(train_fraction * n))
    if n_train < 1 or n_train >= n:
        raise InvalidPartition(
            f"train_fraction={train_fraction} leaves an empty part for n={n}")
    order = np.random.default_rng(seed).permutation(n)
    train_rows, test_rows = order[:n_train], order[n_train:]
    model = trainer(table.take_rows(train_rows), response)
    y_test = table.response(response)[test_rows]
    if y_test.size < 2 or np.all(y_test == y_test[0]):
        raise ConstantResponse("test part has no response variance")
    predicted = model.predict(table.inputs[test_rows])
    cop = 1.0 - np.sum((y_test - predicted) ** 2) / np.sum((y_test - y_test.mean()) ** 2)
    cod_value, adjusted, p = _in_sample_numbers(table, response, trainer)
    return QualityReport(cop=cop, cod=cod_value, cod_adjusted=adjusted, p=p, n=n,
                         scheme={"kind": "split", "train_fraction": train_fraction,
                                 "seed": seed})
