from harness.export import export_arr, export_csv, render_plot
from harness.ground_truth import ground_truth
from harness.metrics import MetricsSeries, compute_arr
from harness.report import summarize_runs
from harness.runner import ReplicateResult, run_experiment, run_replicate

__all__ = [
    "MetricsSeries",
    "compute_arr",
    "ground_truth",
    "export_csv",
    "export_arr",
    "render_plot",
    "summarize_runs",
    "ReplicateResult",
    "run_experiment",
    "run_replicate",
]
