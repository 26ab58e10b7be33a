"""Streaming copula and tail-dependence estimation with biased quantile summaries."""
from .copula import CopulaQueryResult, CopulaSummary, SummarySize, check_alignment, copula_bound
from .experiment import (
    Distribution,
    ExperimentReport,
    StreamSpec,
    compare_modes,
    generate_stream,
    run_experiment,
)
from .quantile import (
    EmptySummaryError,
    ErrorKind,
    ErrorMode,
    ModeMismatchError,
    QuantileSummary,
    check_invariant,
    merge,
    merge_all,
)
from .tail import (
    RawPairs,
    Side,
    TailDependenceEstimate,
    bound_values,
    estimate_lambda_lower,
    estimate_lambda_upper,
    oracle_copula,
    oracle_lambda_lower,
    oracle_lambda_upper,
)

__all__ = [
    "CopulaQueryResult", "CopulaSummary", "Distribution", "EmptySummaryError", "ErrorKind",
    "ErrorMode", "ExperimentReport", "ModeMismatchError", "QuantileSummary", "RawPairs", "Side",
    "StreamSpec", "SummarySize", "TailDependenceEstimate", "bound_values", "check_alignment",
    "check_invariant", "compare_modes", "copula_bound", "estimate_lambda_lower",
    "estimate_lambda_upper", "generate_stream", "merge", "merge_all", "oracle_copula",
    "oracle_lambda_lower", "oracle_lambda_upper", "run_experiment",
]
