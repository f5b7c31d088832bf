"""Automatic metamodel selection over filtered variable subsets, ranked by a
cross-validated prognosis coefficient, with scaled total-effect sensitivity
indices on the winner."""

from .dataset import (
    DesignTable,
    SubsetPartition,
    VariableMeta,
    load_csv,
    make_partition,
    sample_lhs,
    write_csv,
)
from .polyreg import BasisSpec, PolynomialModel, basis_vector, fit_polynomial
from .mls import MlsModel, fit_mls, gaussian_weight
from .quality import (
    QualityReport,
    cod,
    cod_adjusted,
    cop_cross_validation,
    cop_split,
)
from .sensitivity import (
    SensitivityReport,
    coi,
    cop_single,
    scaled_indices,
    sobol_indices,
    total_indices,
)
from .engine import (
    CorrelationMatrix,
    FilterConfig,
    MopResult,
    SearchBounds,
    correlations,
    find_mop,
    importance_filter,
    significance_filter,
)

__all__ = [
    "BasisSpec",
    "CorrelationMatrix",
    "DesignTable",
    "FilterConfig",
    "MlsModel",
    "MopResult",
    "PolynomialModel",
    "QualityReport",
    "SearchBounds",
    "SensitivityReport",
    "SubsetPartition",
    "VariableMeta",
    "basis_vector",
    "cod",
    "cod_adjusted",
    "coi",
    "cop_cross_validation",
    "cop_single",
    "cop_split",
    "correlations",
    "find_mop",
    "fit_mls",
    "fit_polynomial",
    "gaussian_weight",
    "importance_filter",
    "load_csv",
    "make_partition",
    "sample_lhs",
    "scaled_indices",
    "significance_filter",
    "sobol_indices",
    "total_indices",
    "write_csv",
]
