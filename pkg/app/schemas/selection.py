"""
Tuning-parameter grid schema.
"""
from itertools import product

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.config import settings


def _ascending(values: list[float]) -> list[float]:
    if any(v < 0 for v in values):
        raise ValueError("penalty values must be nonnegative")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("penalty values must be strictly ascending")
    return values


def _log_axis(bounds: tuple[float, float], size: int) -> list[float]:
    low, high = bounds
    if low == high:
        return [float(low)]
    return [float(v) for v in np.logspace(np.log10(low), np.log10(high), size)]


class PenaltyGrid(BaseModel):
    """
    Grid of penalty values searched by the selection procedures.

    With `separate_penalties` the cells are (λ₁,₁, λ₁,₂, λ₂) drawn from
    `lambda1_values` × `lambda1_col_values` × `lambda2_values`; otherwise
    they are (λ₁, λ₁, λ₂).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    lambda1_values: list[float] = Field(min_length=1)
    lambda2_values: list[float] = Field(min_length=1)
    separate_penalties: bool = False
    lambda1_col_values: list[float] | None = None
    """Column-space penalties when separate; defaults to `lambda1_values`."""

    @field_validator("lambda1_values", "lambda2_values")
    @classmethod
    def _check_values(cls, v: list[float]) -> list[float]:
        return _ascending(v)

    @field_validator("lambda1_col_values")
    @classmethod
    def _check_col_values(cls, v: list[float] | None) -> list[float] | None:
        if v is None:
            return v
        if not v:
            raise ValueError("lambda1_col_values must not be empty")
        return _ascending(v)

    @model_validator(mode="after")
    def _col_values_need_separate(self) -> "PenaltyGrid":
        if self.lambda1_col_values is not None and not self.separate_penalties:
            raise ValueError("lambda1_col_values requires separate_penalties")
        return self

    @classmethod
    def log_grid(
        cls,
        lambda1_bounds: tuple[float, float],
        lambda2_bounds: tuple[float, float],
        size: int | None = None,
        separate_penalties: bool = False,
    ) -> "PenaltyGrid":
        """Equispaced grid on the log scale, `size` points per axis, bounds inclusive."""
        size = settings.GRID_SIZE if size is None else size
        return cls(
            lambda1_values=_log_axis(lambda1_bounds, size),
            lambda2_values=_log_axis(lambda2_bounds, size),
            separate_penalties=separate_penalties,
        )

    @classmethod
    def single(cls, lambda1: float, lambda2: float) -> "PenaltyGrid":
        return cls(lambda1_values=[lambda1], lambda2_values=[lambda2])

    def cells(self) -> list[tuple[float, float, float]]:
        """All cells as (λ₁,₁, λ₁,₂, λ₂), in ascending lexicographic order."""
        if self.separate_penalties:
            cols = self.lambda1_col_values or self.lambda1_values
            return list(product(self.lambda1_values, cols, self.lambda2_values))
        return [(l1, l1, l2) for l1, l2 in product(self.lambda1_values, self.lambda2_values)]

    def __len__(self) -> int:
        return len(self.cells())
