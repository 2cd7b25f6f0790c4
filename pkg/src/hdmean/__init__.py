"""Two-sample mean tests for high-dimensional data.

The package centers on permutation tests built from Hotelling's T² averaged
over random low-dimensional views of the data: axis-aligned subspaces
(invariant under marginal rescaling) or Gaussian pseudo-projections. It
also bundles the baselines these are usually compared against, generators
for block-correlated synthetic data, and a simulation harness
(``hdmean.experiments``). Numerical kernels run on a numba backend when
available, with a pure-NumPy fallback (``HDMEAN_BACKEND`` selects one
explicitly).
"""

from .backends import active_backend, get_backend
from .core import (
    TwoSampleProblem,
    as_data_matrix,
    column_means,
    hotelling_t2,
    mean_difference,
    pooled_covariance,
)
from .datasets import invariance_problem
from .errors import (
    HdmeanError,
    IncompatibleLayout,
    InvalidK,
    NonFinite,
    NotPositiveDefinite,
    ParseError,
    SingularCovariance,
    TooManyPermutations,
    ZeroVariance,
)
from .permutation import (
    PermutationPlan,
    TestResult,
    exact_permutation_test,
    permutation_test,
)
from .statistics import (
    PROJECTIONS,
    SUBSPACES,
    HotellingStatistic,
    MarginalTestResult,
    ProjectionT2Statistic,
    SrivastavaDuStatistic,
    StatisticValue,
    SubspaceConfig,
    SubspaceT2Statistic,
    benjamini_hochberg_adjust,
    bonferroni_adjust,
    chen_qin_pvalue,
    chen_qin_statistic,
    default_k,
    lopes_statistic,
    marginal_t_combined,
    marginal_t_pvalues,
    projection_matrices,
    random_subspaces_statistic,
    srivastava_du_statistic,
    subspace_draws,
)
from .synthetic import (
    BlockCovariance,
    DistributionSpec,
    ShiftPattern,
    apply_shift,
    build_block_covariance,
    sample,
)

__version__ = "0.1.0"

__all__ = [
    "BlockCovariance",
    "DistributionSpec",
    "HdmeanError",
    "HotellingStatistic",
    "IncompatibleLayout",
    "InvalidK",
    "MarginalTestResult",
    "NonFinite",
    "NotPositiveDefinite",
    "PROJECTIONS",
    "ParseError",
    "PermutationPlan",
    "ProjectionT2Statistic",
    "SUBSPACES",
    "ShiftPattern",
    "SingularCovariance",
    "SrivastavaDuStatistic",
    "StatisticValue",
    "SubspaceConfig",
    "SubspaceT2Statistic",
    "TestResult",
    "TooManyPermutations",
    "TwoSampleProblem",
    "ZeroVariance",
    "active_backend",
    "apply_shift",
    "as_data_matrix",
    "benjamini_hochberg_adjust",
    "bonferroni_adjust",
    "build_block_covariance",
    "chen_qin_pvalue",
    "chen_qin_statistic",
    "column_means",
    "default_k",
    "exact_permutation_test",
    "get_backend",
    "hotelling_t2",
    "invariance_problem",
    "lopes_statistic",
    "marginal_t_combined",
    "marginal_t_pvalues",
    "mean_difference",
    "permutation_test",
    "pooled_covariance",
    "projection_matrices",
    "random_subspaces_statistic",
    "sample",
    "srivastava_du_statistic",
    "subspace_draws",
]
