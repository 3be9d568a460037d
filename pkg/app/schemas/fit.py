"""
Optimiser configuration schemas.

FitSpec configures one run of the alternating normalized-gradient solver.
"""
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field

from app.config import settings


class Termination(str, Enum):
    """Reason the alternating loop stopped."""

    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    DIVERGED = "diverged"


class FitSpec(BaseModel):
    """Penalties, step size and stopping rules of one LEARNER fit."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    rank: int = Field(gt=0)
    """Rank r of the factors U (p×r) and V (q×r)."""

    lambda1_row: float = Field(ge=0)
    """λ₁,₁: penalty on ‖P⊥(Û₁)U‖²."""

    lambda1_col: float = Field(ge=0)
    """λ₁,₂: penalty on ‖P⊥(V̂₁)V‖²."""

    lambda2: float = Field(ge=0)
    """λ₂: balance penalty on ‖UᵀU - VᵀV‖²."""

    step_size: float = Field(gt=0)
    """c: each step moves a factor by c times its Frobenius norm."""

    max_iter: int = Field(default_factory=lambda: settings.FIT_MAX_ITER, gt=0)

    tol: float = Field(default_factory=lambda: settings.FIT_TOL, gt=0)
    """Tolerance on |ε_t - ε_{t-1}|."""

    divergence_factor: float = Field(default_factory=lambda: settings.FIT_DIVERGENCE_FACTOR, gt=1)
    """Stop when ε_t exceeds this multiple of ε₀."""

    @classmethod
    def shared(cls, rank: int, lambda1: float, lambda2: float, step_size: float, **kwargs) -> "FitSpec":
        """Single-λ₁ form: the same penalty on row and column spaces."""
        return cls(
            rank=rank,
            lambda1_row=lambda1,
            lambda1_col=lambda1,
            lambda2=lambda2,
            step_size=step_size,
            **kwargs,
        )

    @property
    def penalties(self) -> tuple[float, float, float]:
        return self.lambda1_row, self.lambda1_col, self.lambda2

    def with_penalties(self, lambda1_row: float, lambda1_col: float, lambda2: float) -> "FitSpec":
        return self.model_copy(
            update={"lambda1_row": lambda1_row, "lambda1_col": lambda1_col, "lambda2": lambda2}
        )

    def with_rank(self, rank: int) -> "FitSpec":
        return self.model_copy(update={"rank": rank})
