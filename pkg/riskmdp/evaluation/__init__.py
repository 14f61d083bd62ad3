from riskmdp.evaluation.monte_carlo import (
    monte_carlo_report,
    run_seeds,
    write_report_json,
    write_table_csv,
)
from riskmdp.evaluation.simulate import simulate
from riskmdp.evaluation.types import (
    EvaluationReport,
    InstanceMetadata,
    RunSummary,
    SampleStats,
    Trajectory,
)

__all__ = [
    "EvaluationReport",
    "InstanceMetadata",
    "RunSummary",
    "SampleStats",
    "Trajectory",
    "monte_carlo_report",
    "run_seeds",
    "simulate",
    "write_report_json",
    "write_table_csv",
]
