"""
Simulation harness for the independent and correlated noise designs.

Every repetition draws the target and source signals and both noisy
matrices from its own child streams (seed, rep, role), so a repetition's
result never depends on which other repetitions run or in what order.
"""
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from pydantic import ValidationError

from app.config import settings
from app.exceptions import ConfigError, InvalidCorrelation, LearnerError, ScenarioFailed
from app.logging_config import setup_logging
from app.schemas.fit import FitSpec
from app.schemas.selection import PenaltyGrid
from app.schemas.simulation import (
    DEFAULT_METHODS,
    Method,
    MethodSummary,
    ScenarioReport,
    Similarity,
    SimPreset,
    SimScenario,
)
from app.services.dlearner import d_learner
from app.services.matrix_core import (
    TruncatedSvd,
    frobenius_error,
    orthonormalize,
    subspace_distance,
    truncated_svd,
)
from app.services.model_select import cv_select, external_select
from app.services.rank_select import RankStrategy, ScreeNot, default_upper_bound, select_rank
from app.utils.rng import StreamRole, child_rng, generator_identity
from app.utils.validators import require_rank

logger = setup_logging()

_SOURCE_METHODS = {Method.LEARNER, Method.DLEARNER, Method.LEARNER_EXTERNAL, Method.SOURCE_SVD}

_GRID_BOUNDS = {
    Similarity.HIGH: ((1e-4, 1e4), (1e-4, 1e4)),
    Similarity.MODERATE: ((1e0, 1e4), (1e-2, 1e1)),
    Similarity.LOW: ((1e0, 1e4), (1e-2, 1e1)),
}
_SQUARE_MODERATE_BOUNDS = ((1e1, 1e3), (1e-6, 1e0))
_CORRELATED_BOUNDS = ((1e-4, 1e4), (1e-4, 1e4))
_CORRELATED_STEP = 0.035
_DEFAULT_RHO = 0.25


def _build_presets() -> dict[str, SimPreset]:
    layouts = {
        "independent": (5000, 50, 0.0),
        "desk": (500, 50, 0.0),
        "square": (500, 500, 0.0),
        "correlated": (5000, 50, _DEFAULT_RHO),
        "desk-correlated": (500, 50, _DEFAULT_RHO),
    }
    presets = {}
    for layout, (p, q, rho) in layouts.items():
        for similarity in Similarity:
            if rho > 0:
                step, bounds = _CORRELATED_STEP, _CORRELATED_BOUNDS
            else:
                step = settings.STEP_PRESETS[similarity.value]
                bounds = _GRID_BOUNDS[similarity]
                if layout == "square" and similarity is Similarity.MODERATE:
                    bounds = _SQUARE_MODERATE_BOUNDS
            name = f"{layout}-{similarity.value}"
            presets[name] = SimPreset(
                name=name,
                scenario=SimScenario(p=p, q=q, r=4, similarity=similarity, rho=rho),
                step_size=step,
                lambda1_bounds=bounds[0],
                lambda2_bounds=bounds[1],
            )
    return presets


PRESETS = _build_presets()


def get_preset(name: str, **overrides) -> SimPreset:
    """
    Look up a named preset, optionally overriding scenario fields.

    Raises:
        ConfigError: If the name is unknown or an override is invalid
    """
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r}; choose from {sorted(PRESETS)}"])
    preset = PRESETS[name]
    updates = {key: value for key, value in overrides.items() if value is not None}
    if not updates:
        return preset
    try:
        scenario = SimScenario.model_validate({**preset.scenario.model_dump(), **updates})
    except ValidationError as e:
        raise ConfigError([f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()]) from e
    return preset.model_copy(update={"scenario": scenario})


def preset_grid(preset: SimPreset, size: int | None = None) -> PenaltyGrid:
    return PenaltyGrid.log_grid(preset.lambda1_bounds, preset.lambda2_bounds, size)


def preset_spec(preset: SimPreset) -> FitSpec:
    """Fit template for a preset: its step size and the default stopping rules."""
    return FitSpec.shared(rank=preset.scenario.r, lambda1=0.0, lambda2=0.0, step_size=preset.step_size)


def gen_target_signal(p: int, q: int, r: int, rng: np.random.Generator) -> TruncatedSvd:
    """Top-r truncation of a p×q matrix with i.i.d. standard normal entries."""
    require_rank(r, min(p, q))
    return truncated_svd(rng.standard_normal((p, q)), r)


def gen_source_signal(
    theta0: TruncatedSvd,
    similarity: Similarity,
    perturb_scale: float,
    rng: np.random.Generator,
) -> TruncatedSvd:
    """
    Derive the source signal from the target signal.

    All levels reverse the order of the singular values. High keeps the
    singular vectors; Moderate and Low add Uniform(-s/√p, s/√p) and
    Uniform(-s/√q, s/√q) perturbations to the left and right vectors and
    orthonormalize.

    Raises:
        RankDeficient: If a perturbed factor loses column rank
    """
    U, V = theta0.U, theta0.V
    if similarity is not Similarity.HIGH:
        p, q = U.shape[0], V.shape[0]
        U = orthonormalize(U + rng.uniform(-perturb_scale / np.sqrt(p), perturb_scale / np.sqrt(p), U.shape))
        V = orthonormalize(V + rng.uniform(-perturb_scale / np.sqrt(q), perturb_scale / np.sqrt(q), V.shape))

    # Θ₁ = U·diag(reversed s)·Vᵀ, stored with nonincreasing singular values
    return TruncatedSvd(U=U[:, ::-1], singular_values=theta0.singular_values, V=V[:, ::-1])


def add_noise(
    theta: np.ndarray,
    sigma_sq: float,
    rho: float,
    rng: np.random.Generator,
    axis: str = "column",
) -> np.ndarray:
    """
    Add mean-zero Gaussian noise with variance sigma_sq.

    With rho > 0 the entries of each column (or each row when axis="row")
    are exchangeable with correlation rho: z = σ(√(1-ρ)·g + √ρ·g₀·𝟙).

    Raises:
        InvalidCorrelation: If rho is outside [0, 1)
    """
    if not 0.0 <= rho < 1.0:
        raise InvalidCorrelation(rho)
    if sigma_sq <= 0:
        raise ConfigError([f"noise variance must be positive, got {sigma_sq}"])

    theta = np.asarray(theta, dtype=float)
    base = theta.T if axis == "row" else theta
    sigma = np.sqrt(sigma_sq)

    g = rng.standard_normal(base.shape)
    if rho == 0.0:
        noise = sigma * g
    else:
        shared = rng.standard_normal(base.shape[1])
        noise = sigma * (np.sqrt(1.0 - rho) * g + np.sqrt(rho) * shared[np.newaxis, :])

    return theta + (noise.T if axis == "row" else noise)


@dataclass
class RepOutcome:
    rep: int
    errors: dict[Method, float] = field(default_factory=dict)
    d_U: float = 0.0
    d_V: float = 0.0
    rank: int | None = None
    lambdas: tuple[float, float, float] | None = None
    external_lambdas: tuple[float, float, float] | None = None


def _run_rep(
    scenario: SimScenario,
    rep: int,
    methods: tuple[Method, ...],
    grid: PenaltyGrid | None,
    spec_template: FitSpec | None,
    strategy: RankStrategy,
    upper_bound: int,
) -> RepOutcome:
    seed = scenario.seed
    theta0_svd = gen_target_signal(
        scenario.p, scenario.q, scenario.r, child_rng(seed, rep, StreamRole.TARGET_SIGNAL)
    )
    theta1_svd = gen_source_signal(
        theta0_svd,
        scenario.similarity,
        scenario.resolved_perturb_scale,
        child_rng(seed, rep, StreamRole.SOURCE_SIGNAL),
    )
    theta0 = theta0_svd.reconstruct()
    Y0 = add_noise(
        theta0, scenario.sigma0_sq, scenario.rho,
        child_rng(seed, rep, StreamRole.TARGET_NOISE), scenario.noise_axis,
    )
    Y1 = add_noise(
        theta1_svd.reconstruct(), scenario.sigma1_sq, scenario.rho,
        child_rng(seed, rep, StreamRole.SOURCE_NOISE), scenario.noise_axis,
    )

    outcome = RepOutcome(
        rep=rep,
        d_U=subspace_distance(theta0_svd.U, theta1_svd.U),
        d_V=subspace_distance(theta0_svd.V, theta1_svd.V),
    )

    source = None
    if _SOURCE_METHODS.intersection(methods):
        outcome.rank = select_rank(Y1, upper_bound, strategy).rank
        source = truncated_svd(Y1, outcome.rank)

    for method in methods:
        if method is Method.TARGET_SVD:
            # The true rank is used for the target-only baseline
            estimate = truncated_svd(Y0, scenario.r).reconstruct()
        elif method is Method.LEARNER:
            selection = cv_select(Y0, source, grid, spec_template, seed=seed, rep=rep)
            outcome.lambdas = selection.best_lambdas
            estimate = selection.final_fit.theta_hat
        elif method is Method.DLEARNER:
            estimate = d_learner(Y0, source.bases())
        elif method is Method.LEARNER_EXTERNAL:
            Y0_ext = add_noise(
                theta0, scenario.sigma0_sq, scenario.rho,
                child_rng(seed, rep, StreamRole.EXTERNAL_NOISE), scenario.noise_axis,
            )
            selection = external_select(Y0, source, Y0_ext, grid, spec_template)
            outcome.external_lambdas = selection.best_lambdas
            estimate = selection.final_fit.theta_hat
        else:
            estimate = source.reconstruct()
        outcome.errors[method] = frobenius_error(estimate, theta0)

    logger.info(
        f"Rep {rep}: d_U={outcome.d_U:.3f}, d_V={outcome.d_V:.3f}, rank={outcome.rank}, "
        + ", ".join(f"{m.value}={e:.4g}" for m, e in outcome.errors.items())
    )
    return outcome


def _guarded_rep(*args, rep: int, **kwargs) -> RepOutcome:
    try:
        return _run_rep(*args, rep=rep, **kwargs)
    except (LearnerError, ArithmeticError, ValueError) as e:
        raise ScenarioFailed(rep, e) from e


def _summarize(method: Method, errors: list[float]) -> MethodSummary:
    values = np.asarray(errors, dtype=float)
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return MethodSummary(method=method, mean_error=float(values.mean()), sd_error=sd, errors=list(map(float, values)))


def run_scenario(
    scenario: SimScenario,
    methods: tuple[Method, ...] | list[Method] = DEFAULT_METHODS,
    grid: PenaltyGrid | None = None,
    spec_template: FitSpec | None = None,
    strategy: RankStrategy | None = None,
    upper_bound: int | None = None,
    n_jobs: int = 1,
) -> ScenarioReport:
    """
    Run every repetition of a scenario and aggregate the estimation errors.

    Args:
        scenario: Generative design including reps and seed
        methods: Estimators to evaluate
        grid: Penalty grid for Learner and LearnerExternal
        spec_template: Step size and stopping rules for Learner and LearnerExternal
        strategy: Rank selection strategy applied to Y₁ (defaults to ScreeNot)
        upper_bound: Rank upper bound (defaults to ⌊min(p, q)/3⌋ capped)
        n_jobs: joblib workers across repetitions; never affects the report

    Returns:
        ScenarioReport with per-method mean and standard deviation of ‖Θ̂₀ - Θ₀‖_F

    Raises:
        ConfigError: If a penalised method is requested without a grid or fit template
        ScenarioFailed: If any repetition fails (carries the rep index)
    """
    methods = tuple(Method(m) for m in dict.fromkeys(methods))
    if not methods:
        raise ConfigError(["at least one method is required"])
    if {Method.LEARNER, Method.LEARNER_EXTERNAL}.intersection(methods) and (grid is None or spec_template is None):
        raise ConfigError(["Learner methods need a penalty grid and a fit template"])

    strategy = strategy or ScreeNot()
    upper_bound = upper_bound or default_upper_bound(scenario.p, scenario.q)

    logger.info(
        f"Running scenario {scenario.similarity.value} {scenario.p}x{scenario.q} r={scenario.r} "
        f"rho={scenario.rho} reps={scenario.reps} seed={scenario.seed} "
        f"methods={[m.value for m in methods]}"
    )
    try:
        outcomes = Parallel(n_jobs=n_jobs)(
            delayed(_guarded_rep)(
                scenario,
                rep=rep,
                methods=methods,
                grid=grid,
                spec_template=spec_template,
                strategy=strategy,
                upper_bound=upper_bound,
            )
            for rep in range(scenario.reps)
        )
    except ScenarioFailed as e:
        logger.error(f"Scenario aborted: {e}", exc_info=True)
        raise

    report = ScenarioReport(
        scenario=scenario,
        methods=list(methods),
        summaries=[_summarize(m, [o.errors[m] for o in outcomes]) for m in methods],
        d_U=[o.d_U for o in outcomes],
        d_V=[o.d_V for o in outcomes],
        mean_d_U=float(np.mean([o.d_U for o in outcomes])),
        mean_d_V=float(np.mean([o.d_V for o in outcomes])),
        selected_ranks=[o.rank for o in outcomes],
        selected_lambdas=[o.lambdas for o in outcomes] if Method.LEARNER in methods else None,
        external_lambdas=(
            [o.external_lambdas for o in outcomes] if Method.LEARNER_EXTERNAL in methods else None
        ),
        seed=scenario.seed,
        generator=generator_identity(),
    )
    for summary in report.summaries:
        logger.info(f"{summary.method.value}: mean={summary.mean_error:.4g}, sd={summary.sd_error:.4g}")
    return report
