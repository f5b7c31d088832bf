"""Variable filtering and the metamodel configuration search.

The search walks every (model kind, significance quantile, importance
threshold) triple, reduces the variable space through two filters, scores the
resulting model by its prognosis coefficient on one shared partition, and
then applies a simplification allowance: among all configurations within
``delta_cop`` of the best score, the least complex model kind wins, then the
smallest variable set, then the higher score.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import sensitivity
from .dataset import DesignTable
from .errors import ConstantColumn, MopkitError, NoFeasibleModel, Underdetermined
from .mls import fit_mls
from .polyreg import BasisSpec, fit_polynomial
from .quality import cop_cross_validation, cop_split

log = logging.getLogger(__name__)

# Model kinds in increasing complexity; the declaration order is the
# preference order used by the simplification allowance.
MODEL_KINDS = {
    "poly_linear": ("polynomial", BasisSpec("linear")),
    "poly_quadratic": ("polynomial", BasisSpec("quadratic")),
    "poly_quadratic_coupling": ("polynomial", BasisSpec("quadratic", coupling=True)),
    "mls_linear": ("mls", BasisSpec("linear")),
    "mls_quadratic": ("mls", BasisSpec("quadratic")),
}
_KIND_RANK = {kind: rank for rank, kind in enumerate(MODEL_KINDS)}


@dataclass(frozen=True)
class FilterConfig:
    """One point of the filter grid: a significance quantile and a minimum
    required importance."""

    significance_quantile: float
    coi_min: float

    QUANTILE_RANGE = (0.90, 0.99)
    COI_RANGE = (0.01, 0.09)

    def __post_init__(self):
        lo, hi = self.QUANTILE_RANGE
        if not lo <= self.significance_quantile <= hi:
            raise ValueError(f"significance_quantile must lie in [{lo}, {hi}]")
        lo, hi = self.COI_RANGE
        if not lo <= self.coi_min <= hi:
            raise ValueError(f"coi_min must lie in [{lo}, {hi}]")


@dataclass(frozen=True)
class SearchBounds:
    """Grids swept by the configuration search."""

    quantiles: tuple = (0.99, 0.975, 0.95, 0.925, 0.90)
    coi_grid: tuple = (0.01, 0.03, 0.05, 0.07, 0.09)
    kinds: tuple = tuple(MODEL_KINDS)

    def __post_init__(self):
        if not self.quantiles or not self.coi_grid or not self.kinds:
            raise ValueError("search grids must be non-empty")
        for kind in self.kinds:
            if kind not in MODEL_KINDS:
                raise ValueError(f"unknown model kind {kind!r}")
        for quantile in self.quantiles:
            FilterConfig(quantile, self.coi_grid[0])
        for coi_min in self.coi_grid:
            FilterConfig(self.quantiles[0], coi_min)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pairwise association of all inputs and the response.

    ``linear`` holds plain product-moment coefficients.  ``quadratic`` holds,
    for each pair, the correlation between one column and its best
    single-variable quadratic fit from the other, symmetrized by taking the
    stronger direction; for an exactly linear relation it reduces to the
    magnitude of the linear coefficient.
    """

    names: tuple
    linear: np.ndarray
    quadratic: np.ndarray

    def __post_init__(self):
        for which in ("linear", "quadratic"):
            matrix = np.asarray(getattr(self, which), dtype=float)
            k = len(self.names)
            if matrix.shape != (k, k):
                raise ValueError(f"{which} matrix must be {k}x{k}")
            if not np.allclose(matrix, matrix.T):
                raise ValueError(f"{which} matrix must be symmetric")
            if not np.allclose(np.diag(matrix), 1.0):
                raise ValueError(f"{which} matrix must have unit diagonal")
            if np.any(np.abs(matrix) > 1.0 + 1e-12):
                raise ValueError(f"{which} entries must lie in [-1, 1]")
            matrix.setflags(write=False)
            object.__setattr__(self, which, matrix)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def input_count(self):
        return len(self.names) - 1

    def input_input_magnitudes(self, which):
        """|off-diagonal| entries among the inputs only, as a flat vector."""
        matrix = getattr(self, which)
        m = self.input_count
        rows, cols = np.triu_indices(m, k=1)
        return np.abs(matrix[rows, cols])

    def response_associations(self, which):
        """Association of each input with the response."""
        return np.abs(getattr(self, which)[: self.input_count, self.input_count])


def _quadratic_association(a, b):
    """sqrt(R^2) of the least-squares fit of b on (a, a^2)."""
    z = (a - a.mean()) / a.std()
    design = np.column_stack([np.ones(a.size), z, z * z])
    coef, *_ = np.linalg.lstsq(design, b, rcond=None)
    ss_res = np.sum((b - design @ coef) ** 2)
    ss_tot = np.sum((b - b.mean()) ** 2)
    return float(np.sqrt(max(0.0, 1.0 - ss_res / ss_tot)))


def correlations(table, response):
    """Linear and quadratic association matrices over inputs plus response."""
    if table.n < 3:
        raise ValueError("need at least 3 samples for correlation estimates")
    y = table.response(response)
    columns = [table.column(j) for j in range(table.m)] + [y]
    names = table.input_names + [response]
    for name, column in zip(names, columns):
        if np.std(column) == 0:
            raise ConstantColumn(name)

    linear = np.corrcoef(np.column_stack(columns).T)
    k = len(columns)
    quadratic = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            entry = max(_quadratic_association(columns[i], columns[j]),
                        _quadratic_association(columns[j], columns[i]))
            quadratic[i, j] = quadratic[j, i] = entry
    return CorrelationMatrix(tuple(names), linear, quadratic)


def significance_filter(matrix, quantile):
    """Inputs whose association with the response exceeds the sampling-noise
    level estimated from the input-input correlations.

    The noise thresholds are the given quantile of the absolute input-input
    entries, taken separately for the linear and the quadratic matrix; an
    input survives by beating either threshold.  With a single input there is
    no noise pool and the input passes unconditionally.
    """
    if not 0.5 <= quantile <= 0.999:
        raise ValueError("quantile must lie in [0.5, 0.999]")
    m = matrix.input_count
    if m == 1:
        log.info("single input passes the significance filter unconditionally")
        return [0]
    survivors = []
    for which in ("linear", "quadratic"):
        threshold = np.quantile(matrix.input_input_magnitudes(which), quantile)
        above = matrix.response_associations(which) > threshold
        survivors.append(above)
    return [int(i) for i in np.flatnonzero(survivors[0] | survivors[1])]


def _densest_feasible_basis(m, n):
    """Richest basis the sample count supports, stepping down from quadratic
    with cross terms."""
    candidates = (BasisSpec("quadratic", coupling=True), BasisSpec("quadratic"),
                  BasisSpec("linear"))
    for spec in candidates:
        if n >= spec.term_count(m):
            if spec != candidates[0]:
                log.info("stepping the filter basis down to %s (n=%d, m=%d)",
                         spec, n, m)
            return spec
    raise Underdetermined(candidates[-1].term_count(m), n)


def importance_filter(table, response, candidates, coi_min):
    """Candidates whose importance in a polynomial regression reaches
    ``coi_min``; if none does, the single most important one is kept."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError("candidates must be non-empty")
    projected = table.project(candidates)
    spec = _densest_feasible_basis(projected.m, projected.n)
    importances = [sensitivity.coi(projected, response, spec, pos)
                   for pos in range(projected.m)]
    retained = [c for c, value in zip(candidates, importances) if value >= coi_min]
    if not retained:
        retained = [candidates[int(np.argmax(importances))]]
    return retained


@dataclass(frozen=True)
class SearchEntry:
    """Outcome of one configuration triple in the search log."""

    kind: str
    quantile: float
    coi_min: float
    status: str                 # "evaluated" | "failed"
    retained: tuple | None = None
    cop: float | None = None
    reason: str | None = None

    def to_dict(self):
        out = {"kind": self.kind, "quantile": self.quantile,
               "coi_min": self.coi_min, "status": self.status}
        if self.status == "evaluated":
            out["retained"] = list(self.retained)
            out["cop"] = float(self.cop)
        else:
            out["reason"] = self.reason
        return out


def select_winner(entries, delta_cop):
    """Apply the simplification allowance to a finished search log.

    Among the evaluated entries whose score is within ``delta_cop`` of the
    maximum, the winner is the first by (model complexity, retained variable
    count, higher score); remaining ties resolve deterministically on the
    retained set and the filter settings.  Returns ``None`` when nothing
    evaluated.
    """
    evaluated = [e for e in entries if e.status == "evaluated"]
    if not evaluated:
        return None
    best = max(e.cop for e in evaluated)
    eligible = [e for e in evaluated if e.cop >= best - delta_cop]
    return min(eligible, key=lambda e: (_KIND_RANK[e.kind], len(e.retained),
                                        -e.cop, e.retained, -e.quantile, e.coi_min))


def trainer_for(kind, seed=0):
    """Fitting procedure for a named model kind."""
    family, spec = MODEL_KINDS[kind]
    if family == "polynomial":
        return lambda table, response: fit_polynomial(table, response, spec)
    return lambda table, response: fit_mls(table, response, spec, D=None, seed=seed)


@dataclass
class MopResult:
    """The winning configuration with everything needed to reuse it."""

    model_kind: str
    retained_variables: tuple   # indices into the original table
    retained_names: tuple
    filter: FilterConfig
    cop: float
    quality: object             # QualityReport of the winner
    search_log: list = field(repr=False)
    sensitivity: object = None  # SensitivityReport
    model: object = None        # fitted winner, refit on all samples
    scheme: dict = None
    delta_cop: float = 0.03

    def to_dict(self):
        return {
            "model_kind": self.model_kind,
            "retained_variables": list(self.retained_variables),
            "retained_names": list(self.retained_names),
            "filter": {
                "significance_quantile": self.filter.significance_quantile,
                "coi_min": self.filter.coi_min,
            },
            "cop": float(self.cop),
            "quality": self.quality.to_dict(),
            "scheme": self.scheme,
            "delta_cop": self.delta_cop,
            "sensitivity": self.sensitivity.to_dict() if self.sensitivity else None,
            "search_log": [entry.to_dict() for entry in self.search_log],
        }


def _evaluate_scheme(table, response, trainer, scheme):
    if scheme["kind"] == "cross_validation":
        return cop_cross_validation(table, response, trainer,
                                    q=scheme["q"], seed=scheme["seed"])
    if scheme["kind"] == "split":
        return cop_split(table, response, trainer,
                         scheme["train_fraction"], seed=scheme["seed"])
    raise ValueError(f"unknown scheme kind {scheme['kind']!r}")


def find_mop(table, response, search=None, q=5, seed=0, delta_cop=0.03,
             index_samples=10000, scheme=None):
    """Search every configuration triple and return the optimal metamodel.

    All evaluations share one partition seed so score differences reflect the
    configurations, not partition noise.  The returned result carries the
    full search log, the refit winning model and its sensitivity report.
    """
    if delta_cop < 0:
        raise ValueError("delta_cop must be non-negative")
    search = search if search is not None else SearchBounds()
    scheme = dict(scheme) if scheme else {"kind": "cross_validation", "q": q, "seed": seed}

    matrix = correlations(table, response)
    survivors_by_quantile = {}
    retained_cache = {}
    evaluation_cache = {}
    entries = []

    for kind in search.kinds:
        for quantile in search.quantiles:
            if quantile not in survivors_by_quantile:
                survivors_by_quantile[quantile] = significance_filter(matrix, quantile)
            survivors = survivors_by_quantile[quantile]
            for coi_min in search.coi_grid:
                entry = _evaluate_triple(table, response, kind, quantile, coi_min,
                                         survivors, retained_cache,
                                         evaluation_cache, seed, scheme)
                entries.append(entry)

    winner = select_winner(entries, delta_cop)
    if winner is None:
        raise NoFeasibleModel([f"{e.kind}@q={e.quantile},coi={e.coi_min}: {e.reason}"
                               for e in entries])

    projected = table.project(list(winner.retained))
    trainer = trainer_for(winner.kind, seed)
    model = trainer(projected, response)
    report = evaluation_cache[(winner.kind, winner.retained)][1]
    cv_selected = scheme == {"kind": "cross_validation", "q": q, "seed": seed}
    sens = _sensitivity_report(projected, response, model, trainer, winner.cop,
                               q, seed, index_samples,
                               full_cop=winner.cop if cv_selected else None)

    return MopResult(
        model_kind=winner.kind,
        retained_variables=winner.retained,
        retained_names=tuple(table.variables[i].name for i in winner.retained),
        filter=FilterConfig(winner.quantile, winner.coi_min),
        cop=winner.cop,
        quality=report,
        search_log=entries,
        sensitivity=sens,
        model=model,
        scheme=scheme,
        delta_cop=delta_cop,
    )


def _evaluate_triple(table, response, kind, quantile, coi_min, survivors,
                     retained_cache, evaluation_cache, seed, scheme):
    def failed(reason):
        return SearchEntry(kind, quantile, coi_min, "failed", reason=reason)

    if not survivors:
        return failed("significance filter removed every variable")

    retained_key = (tuple(survivors), coi_min)
    if retained_key not in retained_cache:
        try:
            retained_cache[retained_key] = tuple(
                importance_filter(table, response, survivors, coi_min))
        except MopkitError as exc:
            retained_cache[retained_key] = exc
    retained = retained_cache[retained_key]
    if isinstance(retained, Exception):
        return failed(f"importance filter: {retained}")

    evaluation_key = (kind, retained)
    if evaluation_key not in evaluation_cache:
        try:
            projected = table.project(list(retained))
            report = _evaluate_scheme(projected, response, trainer_for(kind, seed),
                                      scheme)
            evaluation_cache[evaluation_key] = ("ok", report)
        except MopkitError as exc:
            evaluation_cache[evaluation_key] = ("err", exc)
    status, payload = evaluation_cache[evaluation_key]
    if status == "err":
        return failed(str(payload))
    return SearchEntry(kind, quantile, coi_min, "evaluated",
                       retained=retained, cop=payload.cop)


def _sensitivity_report(projected, response, model, trainer, cop, q, seed,
                        index_samples, full_cop=None):
    # the per-variable reduction measure is defined through cross validation
    # even when the selection scheme was a data split
    spec = _densest_feasible_basis(projected.m, projected.n)
    if full_cop is None:
        full_cop = cop_cross_validation(projected, response, trainer, q=q, seed=seed).cop
    per_variable = {}
    for pos, name in enumerate(projected.input_names):
        rest = [j for j in range(projected.m) if j != pos]
        if rest:
            reduced_cop = cop_cross_validation(projected.project(rest), response,
                                               trainer, q=q, seed=seed).cop
        else:
            reduced_cop = 0.0
        per_variable[name] = {
            "coi": sensitivity.coi(projected, response, spec, pos),
            "cop_reduction": full_cop - reduced_cop,
        }

    index_variables = sensitivity.variables_for_indices(projected)
    _, totals = sensitivity.sobol_indices(model, index_variables, index_samples, seed)
    scaled = sensitivity.scaled_indices(totals, cop)
    for pos, name in enumerate(projected.input_names):
        per_variable[name]["total_index"] = float(totals[pos])
        per_variable[name]["total_index_scaled"] = float(scaled[pos])

    return sensitivity.SensitivityReport(
        total_cop=cop,
        per_variable=per_variable,
        estimator_samples=index_samples,
        seed=seed,
        flagged_unsuitable=not cop > 0,
    )
