"""Variable-importance measures on fitted approximations.

Three graded views: the drop in in-sample determination when one variable is
refit away, the analogous drop in cross-validated prognosis, and
variance-based total-effect indices estimated on the metamodel itself, which
converge much faster than the refit-based measures.  Total-effect estimates
are finally rescaled by the metamodel's prognosis coefficient so they never
claim more explanatory power than the metamodel demonstrated out of sample.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dataset import VariableMeta
from .polyreg import fit_polynomial
from .quality import cod, cop_cross_validation

log = logging.getLogger(__name__)

MIN_ESTIMATOR_SAMPLES = 1000


def coi(table, response, spec, i):
    """Determination drop when input ``i`` is removed from the regression.

    The reduced model is refit from scratch on the remaining columns; with a
    single input the reduced model degenerates to the response mean, whose
    determination is zero by definition.
    """
    y = table.response(response)
    full = fit_polynomial(table, response, spec)
    cod_full = cod(y, full.predict(table.inputs))
    rest = [j for j in range(table.m) if j != i]
    if not rest:
        return cod_full
    reduced = fit_polynomial(table.project(rest), response, spec)
    cod_reduced = cod(y, reduced.predict(table.inputs[:, rest]))
    return cod_full - cod_reduced


def cop_single(table, response, trainer, i, q=5, seed=0):
    """Prognosis drop when input ``i`` is removed, both sides sharing the
    same partition seed."""
    full = cop_cross_validation(table, response, trainer, q=q, seed=seed).cop
    rest = [j for j in range(table.m) if j != i]
    if not rest:
        return full
    reduced = cop_cross_validation(table.project(rest), response, trainer,
                                   q=q, seed=seed).cop
    return full - reduced


def _predictor(model):
    predict = getattr(model, "predict", None)
    if predict is None and callable(model):
        predict = model
    if predict is None:
        raise TypeError("model must expose predict() or be callable")
    return predict


def _sample_inputs(variables, n, rng):
    return np.column_stack([v.sample(rng, n) for v in variables])


def sobol_indices(model, variables, n_base, seed=0):
    """First-order and total-effect indices on the metamodel.

    Uses the two-matrix sampling scheme with one hybrid matrix per variable
    and the low-variance squared-difference estimators; ``(2 + m) * n_base``
    model evaluations in total.  Returns ``(first_order, total)`` arrays, both
    clamped to [0, 1].
    """
    predict = _predictor(model)
    rng = np.random.default_rng(seed)
    m = len(variables)
    A = _sample_inputs(variables, n_base, rng)
    B = _sample_inputs(variables, n_base, rng)
    f_a = np.asarray(predict(A), dtype=float)
    f_b = np.asarray(predict(B), dtype=float)
    variance = np.var(np.concatenate([f_a, f_b]), ddof=1)
    if variance == 0:
        return np.zeros(m), np.zeros(m)

    first = np.empty(m)
    total = np.empty(m)
    for i in range(m):
        hybrid = A.copy()
        hybrid[:, i] = B[:, i]
        f_h = np.asarray(predict(hybrid), dtype=float)
        total[i] = np.mean((f_a - f_h) ** 2) / (2.0 * variance)
        first[i] = 1.0 - np.mean((f_b - f_h) ** 2) / (2.0 * variance)
    return np.clip(first, 0.0, 1.0), np.clip(total, 0.0, 1.0)


def total_indices(model, variables, n_base=10000, seed=0):
    """Total-effect indices per variable, clamped to [0, 1]."""
    if n_base < MIN_ESTIMATOR_SAMPLES:
        raise ValueError(f"n_base must be at least {MIN_ESTIMATOR_SAMPLES}")
    _, total = sobol_indices(model, variables, n_base, seed)
    return total


def scaled_indices(indices, cop):
    """Rescale indices by the prognosis coefficient; a metamodel with
    non-positive prognosis gets all-zero scaled indices."""
    if cop > 1.0:
        raise ValueError("cop cannot exceed 1")
    return np.asarray(indices, dtype=float) * max(cop, 0.0)


def variables_for_indices(table):
    """Sampling distributions for index estimation.

    Declared distributions are used as-is; columns without one fall back to a
    uniform over the observed range, which is logged because it changes what
    the indices mean.
    """
    out = []
    for v in table.variables:
        if v.kind is not None:
            out.append(v)
            continue
        column = table.column(v.index)
        lo, hi = float(column.min()), float(column.max())
        if not lo < hi:
            raise ValueError(f"column {v.name!r} is constant; cannot infer a range")
        log.warning(
            "variable %r has no declared distribution; using uniform over "
            "the observed range [%g, %g] for sensitivity estimation",
            v.name, lo, hi)
        out.append(VariableMeta.uniform(v.name, v.index, lo, hi))
    return out


@dataclass
class SensitivityReport:
    """Per-variable importance numbers for one fitted metamodel."""

    total_cop: float
    per_variable: dict            # name -> {coi, cop_reduction, total_index, total_index_scaled}
    estimator_samples: int
    seed: int
    flagged_unsuitable: bool = False

    def to_dict(self):
        return {
            "total_cop": float(self.total_cop),
            "per_variable": {
                name: {k: float(v) for k, v in row.items()}
                for name, row in self.per_variable.items()
            },
            "estimator_samples": self.estimator_samples,
            "seed": self.seed,
            "flagged_unsuitable": self.flagged_unsuitable,
        }
