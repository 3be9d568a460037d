"""
Resolved configuration of one command-line run.

A RunConfig is validated before any computation starts and is recorded
verbatim in the run's manifest.
"""
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from app.schemas.fit import FitSpec
from app.schemas.selection import PenaltyGrid
from app.schemas.simulation import SimScenario


class RankConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    strategy: str
    rank: int | None = Field(default=None, gt=0)
    upper_bound: int | None = Field(default=None, gt=0)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    command: str
    inputs: dict[str, str] = {}
    out_dir: str | None = None
    seed: int | None = Field(default=None, ge=0)
    threads: int
    impute_zero: bool = False
    rank: RankConfig | None = None
    fit: FitSpec | None = None
    grid: PenaltyGrid | None = None
    scenario: SimScenario | None = None
    options: dict[str, Any] = {}
    """Command-specific settings that have no dedicated record."""
