"""Experiment plans, the plan runner, summaries and the command line."""

from .plan import (
    ALGORITHMS,
    ConfigurationError,
    ExperimentPlan,
    UnsupportedOperation,
    cell_seed,
    get_algorithm,
    load_plan,
)
from .runner import ResultRow, export_exact_posterior, read_rows, read_traces, result_columns, run_plan
from .summary import emit_summary, summarize_rows

__all__ = [
    "ALGORITHMS",
    "ConfigurationError",
    "ExperimentPlan",
    "ResultRow",
    "UnsupportedOperation",
    "cell_seed",
    "emit_summary",
    "export_exact_posterior",
    "get_algorithm",
    "load_plan",
    "read_rows",
    "read_traces",
    "result_columns",
    "run_plan",
    "summarize_rows",
]
