"""Headless closed-loop scenario harness."""

from .csvio import export_csv, read_csv
from .runner import (COLUMNS, ComparisonReport, RunResult,
                     TimelineMismatchError, compare, compute_metrics,
                     run_closed_loop)
from .scenario import (ScenarioConfig, ScenarioError, bundled_scenario_names,
                       load_bundled, load_scenario)

__all__ = [
    "ScenarioConfig", "ScenarioError", "load_scenario", "load_bundled",
    "bundled_scenario_names", "run_closed_loop", "RunResult", "compare",
    "ComparisonReport", "compute_metrics", "TimelineMismatchError",
    "export_csv", "read_csv", "COLUMNS",
]
