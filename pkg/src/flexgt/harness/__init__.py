"""Configuration-driven experiments, persistence and charts."""

from .config import (
    ConfigError,
    ExperimentConfig,
    ResolvedExperiment,
    algorithm_name,
    load_config,
    paper_config,
    parse_config,
    resolve,
)
from .export import TRACE_COLUMNS, ExportError, export_csv, export_json, export_problem_csv
from .runner import (
    ComparisonResult,
    Curve,
    SweepResult,
    average_curve,
    run_comparison,
    run_experiment,
    run_sweep,
)
from .svg import render_svg

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResolvedExperiment",
    "algorithm_name",
    "load_config",
    "paper_config",
    "parse_config",
    "resolve",
    "TRACE_COLUMNS",
    "ExportError",
    "export_csv",
    "export_json",
    "export_problem_csv",
    "ComparisonResult",
    "Curve",
    "SweepResult",
    "average_curve",
    "run_comparison",
    "run_experiment",
    "run_sweep",
    "render_svg",
]
