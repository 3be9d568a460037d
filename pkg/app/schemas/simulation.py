"""
Simulation scenario, preset and report schemas.
"""
from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config import settings
from app.schemas.common import Versioned


class Similarity(str, Enum):
    """How the source latent spaces relate to the target ones."""

    HIGH = "high"
    MODERATE = "moderate"
    LOW = "low"


class Method(str, Enum):
    """Estimators compared by the simulation harness."""

    TARGET_SVD = "TargetSvd"
    LEARNER = "Learner"
    DLEARNER = "DLearner"
    LEARNER_EXTERNAL = "LearnerExternal"
    SOURCE_SVD = "SourceSvd"


DEFAULT_METHODS = (Method.TARGET_SVD, Method.LEARNER, Method.DLEARNER)

# Perturbation half-widths s of the Uniform(-s/√p, s/√p) noise added to the singular vectors
DEFAULT_PERTURB_SCALE = {
    Similarity.MODERATE: 0.25,
    Similarity.LOW: 0.5,
}


class SimScenario(BaseModel):
    """Generative design of one simulation experiment."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    p: int = Field(gt=0)
    q: int = Field(gt=0)
    r: int = Field(gt=0)
    similarity: Similarity
    perturb_scale: float | None = Field(default=None, gt=0)
    sigma0_sq: float = Field(default=0.1, gt=0)
    sigma1_sq: float = Field(default=0.01, gt=0)
    rho: float = Field(default=0.0, ge=0, lt=1)
    noise_axis: Literal["column", "row"] = "column"
    """Axis along which noise entries are exchangeable: within each column or within each row."""
    reps: int = Field(default_factory=lambda: settings.SIM_REPS, gt=0)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _rank_fits(self) -> "SimScenario":
        if self.r > min(self.p, self.q):
            raise ValueError(f"r={self.r} exceeds min(p, q)={min(self.p, self.q)}")
        return self

    @property
    def resolved_perturb_scale(self) -> float:
        if self.perturb_scale is not None:
            return self.perturb_scale
        return DEFAULT_PERTURB_SCALE.get(self.similarity, 0.0)


class SimPreset(BaseModel):
    """A scenario together with the step size and grid bounds it is run with."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    scenario: SimScenario
    step_size: float = Field(gt=0)
    lambda1_bounds: tuple[float, float]
    lambda2_bounds: tuple[float, float]


class MethodSummary(BaseModel):
    method: Method
    mean_error: float
    sd_error: float = Field(ge=0)
    errors: list[float]


class ScenarioReport(Versioned):
    """Aggregated Frobenius estimation errors of one scenario run."""

    scenario: SimScenario
    methods: list[Method]
    summaries: list[MethodSummary]
    d_U: list[float]
    d_V: list[float]
    mean_d_U: float
    mean_d_V: float
    selected_ranks: list[int | None]
    selected_lambdas: list[tuple[float, float, float]] | None = None
    external_lambdas: list[tuple[float, float, float]] | None = None
    seed: int
    generator: str

    def summary(self, method: Method) -> MethodSummary:
        for item in self.summaries:
            if item.method == method:
                return item
        raise KeyError(method)
