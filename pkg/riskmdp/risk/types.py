from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class RiskKind(str, Enum):
    """One-step risk transition mapping."""

    EXPECTATION = "expectation"
    CVAR = "cvar"
    EVAR = "evar"


class RiskMeasure(BaseModel):
    """Tagged risk measure; ``epsilon`` is ignored for the expectation."""

    model_config = ConfigDict(frozen=True)

    kind: RiskKind = RiskKind.EXPECTATION
    epsilon: float = Field(default=1.0, gt=0.0, le=1.0)

    @classmethod
    def expectation(cls) -> "RiskMeasure":
        return cls(kind=RiskKind.EXPECTATION)

    @classmethod
    def cvar(cls, epsilon: float) -> "RiskMeasure":
        return cls(kind=RiskKind.CVAR, epsilon=epsilon)

    @classmethod
    def evar(cls, epsilon: float) -> "RiskMeasure":
        return cls(kind=RiskKind.EVAR, epsilon=epsilon)

    @property
    def is_linear(self) -> bool:
        return self.kind == RiskKind.EXPECTATION

    @property
    def label(self) -> str:
        if self.kind == RiskKind.EXPECTATION:
            return "E"
        return f"{self.kind.value.upper()}({self.epsilon:g})"


@dataclass(frozen=True)
class SigmaResult:
    value: float
    subgradient: np.ndarray
    zeta_star: float | None = None


@dataclass(frozen=True)
class SigmaBatch:
    """σ evaluated on R padded distributions.

    ``weights`` has the shape of the input values; padded (zero-probability)
    slots get weight 0. ``zeta`` is NaN for the expectation.
    """

    values: np.ndarray
    weights: np.ndarray
    zeta: np.ndarray
