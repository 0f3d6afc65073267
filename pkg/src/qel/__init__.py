"""Exact externality analysis for the FCFS M/G/1 queue.

Computes the law of the number of customers served in a busy period, closed
form moments and finite-dimensional Laplace-Stieltjes transforms of the
externality process (the total extra waiting inflicted on later customers by
an extra x units of work), level-crossing times of its right derivative, and
Gaussian scaling limits -- each validated against a pathwise-exact simulator.
"""

from .analytics import (
    MomentReport,
    autocorrelation,
    autocovariance,
    finite_dim_lst,
    finite_dim_lst_detailed,
    mean_externality,
    moment_report,
    variance_externality,
)
from .busy_period import (
    BusyPeriodLaw,
    bell_incomplete,
    count_lst,
    count_moment,
    count_moments_closed_form,
    count_pmf,
    pgf_fixed_point,
)
from .crossing import (
    CrossingReport,
    crossing_mean,
    crossing_report,
    crossing_variance,
    simulate_crossing_times,
)
from .distributions import (
    Deterministic,
    Erlang,
    Exponential,
    Fixed,
    HyperExponential,
    ModelParams,
    RandomWorkload,
    Stationary,
    dist_from_config,
    dist_to_config,
    init_from_config,
    init_to_config,
)
from .errors import DomainError, NumericalError, QelError, TruncationError
from .fclt import (
    ConditionReport,
    ExperimentReport,
    JumpLaw,
    ScalingSequence,
    condition_check,
    cpp_gaussian_experiment,
    limit_covariance,
    limit_marginal_variance,
    scaled_externality_experiment,
)
from .rng import make_stream, split_streams
from .simulate import (
    PathRealization,
    derivative_process,
    direct_externality,
    externality_from_path,
    sample_decomposition,
    sample_externality_paths,
    sample_increment,
    simulate_path,
)

__version__ = "1.0.0"

__all__ = [
    "__version__",
    "MomentReport",
    "autocorrelation",
    "autocovariance",
    "finite_dim_lst",
    "finite_dim_lst_detailed",
    "mean_externality",
    "moment_report",
    "variance_externality",
    "BusyPeriodLaw",
    "bell_incomplete",
    "count_lst",
    "count_moment",
    "count_moments_closed_form",
    "count_pmf",
    "pgf_fixed_point",
    "CrossingReport",
    "crossing_mean",
    "crossing_report",
    "crossing_variance",
    "simulate_crossing_times",
    "Deterministic",
    "Erlang",
    "Exponential",
    "Fixed",
    "HyperExponential",
    "ModelParams",
    "RandomWorkload",
    "Stationary",
    "dist_from_config",
    "dist_to_config",
    "init_from_config",
    "init_to_config",
    "DomainError",
    "NumericalError",
    "QelError",
    "TruncationError",
    "ConditionReport",
    "ExperimentReport",
    "JumpLaw",
    "ScalingSequence",
    "condition_check",
    "cpp_gaussian_experiment",
    "limit_covariance",
    "limit_marginal_variance",
    "scaled_externality_experiment",
    "make_stream",
    "split_streams",
    "PathRealization",
    "derivative_process",
    "direct_externality",
    "externality_from_path",
    "sample_decomposition",
    "sample_externality_paths",
    "sample_increment",
    "simulate_path",
]
