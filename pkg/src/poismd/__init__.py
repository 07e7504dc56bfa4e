"""Stein factors and moderate-deviation error bounds for Poisson approximation
of rare-event counts, with exact distribution oracles for validating every
bound and a CLI that regenerates the ratio-curve and factor-scan data."""

from .logtails import (
    LogProb,
    PoissonTailTriple,
    log_diff_exp,
    log_normal_sf,
    log_poisson_cdf,
    log_poisson_pmf,
    log_poisson_sf,
    log_sum_exp,
    poisson_tail_triple,
)
from .stein import (
    GapScanRow,
    SolutionReport,
    SteinConsistencyError,
    SteinFactorSet,
    SteinSolution,
    conjecture_scan,
    solve_stein_equation,
    stein_factors,
    verify_solution_properties,
)
from .distributions import (
    AccuracyError,
    AppModel,
    Birthday,
    DistributionTable,
    Matching,
    MomentSummary,
    MonteCarloEstimate,
    Occupancy,
    PoissonBinomial,
    Records,
    Triangles,
    TwoRuns,
    birthday_mu,
    birthday_table_small,
    exact_table,
    matching_table,
    occupancy_params,
    occupancy_table,
    poisson_binomial_params,
    poisson_binomial_table,
    records_params,
    records_success_probs,
    triangles_params,
    triangles_table_small,
    two_runs_params,
    two_runs_table,
)
from .sampling import monte_carlo_tail
from .bounds import (
    BoundBreakdown,
    LocalDependenceIngredients,
    RatioBracketInputs,
    SizeBiasSummary,
    TailShiftQuery,
    birthday_bound,
    independent_sum_bound,
    left_tail_bound,
    local_dependence_bound,
    matching_bound,
    occupancy_bound,
    poisson_binomial_bound,
    poisson_binomial_ratio_bracket,
    poisson_binomial_shifted_bound,
    records_bound,
    size_bias_bound,
    size_bias_e_abs,
    triangles_bound,
    two_runs_bound,
    two_runs_bound_shifted,
    two_runs_shift,
    zero_bias_bound,
)

__version__ = "0.1.0"
