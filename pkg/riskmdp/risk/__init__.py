from riskmdp.risk.sigma import (
    cvar_sigma,
    evar_sigma,
    expectation_sigma,
    sigma,
    sigma_batch,
    sigma_rows,
)
from riskmdp.risk.types import RiskKind, RiskMeasure, SigmaBatch, SigmaResult

__all__ = [
    "RiskKind",
    "RiskMeasure",
    "SigmaBatch",
    "SigmaResult",
    "cvar_sigma",
    "evar_sigma",
    "expectation_sigma",
    "sigma",
    "sigma_batch",
    "sigma_rows",
]
