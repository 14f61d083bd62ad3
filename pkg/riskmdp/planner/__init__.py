from riskmdp.planner.bellman import (
    bellman_iterates,
    evaluate_policy,
    extract_policy,
    policy_risk_evaluation,
    policy_risk_values,
    q_values,
    risk_value_iteration,
)
from riskmdp.planner.io import read_plan, write_oracle, write_plan
from riskmdp.planner.oracle import brute_force_constrained_optimum, lagrangian_value
from riskmdp.planner.planner import lagrangian_dual_value, plan, plan_measures
from riskmdp.planner.program import assemble_program
from riskmdp.planner.types import (
    OracleResult,
    PlanDiagnostics,
    PlannerConfig,
    PlanResult,
    PlanStatus,
    Policy,
)

__all__ = [
    "OracleResult",
    "PlanDiagnostics",
    "PlanResult",
    "PlanStatus",
    "PlannerConfig",
    "Policy",
    "assemble_program",
    "bellman_iterates",
    "brute_force_constrained_optimum",
    "evaluate_policy",
    "extract_policy",
    "lagrangian_dual_value",
    "lagrangian_value",
    "plan",
    "plan_measures",
    "policy_risk_evaluation",
    "policy_risk_values",
    "q_values",
    "read_plan",
    "risk_value_iteration",
    "write_oracle",
    "write_plan",
]
