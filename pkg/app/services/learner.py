"""
LEARNER objective, gradients and the alternating normalized-gradient solver.

The objective for factors U (p×r) and V (q×r) is

    (pq/|Ω|)·Σ_Ω ((UVᵀ)_ij - Y₀,ij)²
      + λ₁,₁‖P⊥(Û₁)U‖² + λ₁,₂‖P⊥(V̂₁)V‖² + λ₂‖UᵀU - VᵀV‖²

which reduces to the fully observed objective when Ω holds every entry.
Residuals are zeroed off Ω instead of materializing the imputed target.
"""
from dataclasses import dataclass, field

import numpy as np

from app.exceptions import ConfigError, DimensionMismatch
from app.logging_config import setup_logging
from app.schemas.fit import FitSpec, Termination
from app.services.matrix_core import (
    ObservedMatrix,
    SourceBases,
    TruncatedSvd,
    apply_complement_projection,
)
from app.utils.validators import require_finite, require_matrix, require_shape

logger = setup_logging()

# A gradient below this fraction of its terms' magnitude is round-off at a stationary point
STATIONARY_RTOL = 1e-12


@dataclass(frozen=True)
class FitResult:
    """Best iterate of one LEARNER run together with its objective trajectory."""

    U_best: np.ndarray
    V_best: np.ndarray
    objective_trajectory: list[float]
    t_best: int
    termination: Termination
    spec: FitSpec
    threads: int = 1
    theta_hat: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "theta_hat", self.U_best @ self.V_best.T)

    @property
    def iterations(self) -> int:
        return len(self.objective_trajectory) - 1

    @property
    def best_objective(self) -> float:
        return self.objective_trajectory[self.t_best]


class _Problem:
    """Target data, source bases and penalties bound together for repeated evaluation."""

    def __init__(self, Y0, bases: SourceBases, spec: FitSpec):
        if isinstance(Y0, ObservedMatrix):
            self.values = np.asarray(Y0.values)
            self.mask = Y0.observed_mask
            self.scale = Y0.values.size / Y0.n_observed
        else:
            # Dedicated fully observed path
            self.values = require_matrix(Y0, "Y0")
            require_finite(self.values, "Y0")
            self.mask = None
            self.scale = 1.0

        p, q = self.values.shape
        if bases.U1.shape[0] != p:
            raise DimensionMismatch("U1", f"({p}, *)", bases.U1.shape)
        if bases.V1.shape[0] != q:
            raise DimensionMismatch("V1", f"({q}, *)", bases.V1.shape)

        observed = self.values if self.mask is None else np.where(self.mask, self.values, 0.0)
        self.target_norm = float(np.sqrt(np.sum(observed ** 2)))
        self.bases = bases
        self.spec = spec

    def gradient_scale(self, factor: np.ndarray, other: np.ndarray, lambda1: float) -> float:
        """Upper bound on the Frobenius norm of each term of the gradient with respect to `factor`."""
        a, b = np.linalg.norm(factor), np.linalg.norm(other)
        _, _, l2 = self.spec.penalties
        return float(
            2.0 * self.scale * (a * b + self.target_norm) * b
            + 2.0 * lambda1 * a
            + 4.0 * l2 * a * (a * a + b * b)
        )

    def check_factors(self, U: np.ndarray, V: np.ndarray) -> None:
        p, q = self.values.shape
        require_shape(U, (p, U.shape[1]), "U")
        require_shape(V, (q, U.shape[1]), "V")

    def residual(self, U: np.ndarray, V: np.ndarray) -> np.ndarray:
        residual = U @ V.T - self.values
        if self.mask is not None:
            residual = np.where(self.mask, residual, 0.0)
        return residual

    def objective(self, U: np.ndarray, V: np.ndarray) -> float:
        l1_row, l1_col, l2 = self.spec.penalties
        fit_term = self.scale * np.sum(self.residual(U, V) ** 2)
        row_term = l1_row * np.sum(apply_complement_projection(self.bases.U1, U) ** 2)
        col_term = l1_col * np.sum(apply_complement_projection(self.bases.V1, V) ** 2)
        balance = l2 * np.sum((U.T @ U - V.T @ V) ** 2)
        return float(fit_term + row_term + col_term + balance)

    def grad_u(self, U: np.ndarray, V: np.ndarray) -> np.ndarray:
        l1_row, _, l2 = self.spec.penalties
        return (
            2.0 * self.scale * (self.residual(U, V) @ V)
            + 2.0 * l1_row * apply_complement_projection(self.bases.U1, U)
            + 4.0 * l2 * (U @ (U.T @ U - V.T @ V))
        )

    def grad_v(self, U: np.ndarray, V: np.ndarray) -> np.ndarray:
        _, l1_col, l2 = self.spec.penalties
        return (
            2.0 * self.scale * (self.residual(U, V).T @ U)
            + 2.0 * l1_col * apply_complement_projection(self.bases.V1, V)
            + 4.0 * l2 * (V @ (V.T @ V - U.T @ U))
        )


def objective(U, V, Y0, bases: SourceBases, spec: FitSpec) -> float:
    """
    Evaluate the LEARNER objective at (U, V).

    Args:
        U: p×r factor
        V: q×r factor
        Y0: Target matrix (array or ObservedMatrix; missing entries are skipped
            and the squared-error term is rescaled by pq/|Ω|)
        bases: Source bases Û₁, V̂₁
        spec: Penalties

    Raises:
        DimensionMismatch: When shapes are inconsistent
        EmptyObservationSet: When Y0 has no observed entry
    """
    problem = _Problem(Y0, bases, spec)
    problem.check_factors(U, V)
    return problem.objective(U, V)


def grad_u(U, V, Y0, bases: SourceBases, spec: FitSpec) -> np.ndarray:
    """Analytic gradient of the objective with respect to U."""
    problem = _Problem(Y0, bases, spec)
    problem.check_factors(U, V)
    return problem.grad_u(U, V)


def grad_v(U, V, Y0, bases: SourceBases, spec: FitSpec) -> np.ndarray:
    """Analytic gradient of the objective with respect to V."""
    problem = _Problem(Y0, bases, spec)
    problem.check_factors(U, V)
    return problem.grad_v(U, V)


def normalized_step(
    factor: np.ndarray, gradient: np.ndarray, step_size: float, gradient_scale: float = 0.0
) -> np.ndarray:
    """
    Move `factor` by c·‖factor‖_F against the gradient direction.

    The factor is returned unchanged when the gradient norm is at most
    STATIONARY_RTOL·gradient_scale, i.e. numerically zero next to the terms it
    is built from.
    """
    norm = np.linalg.norm(gradient)
    if norm <= STATIONARY_RTOL * gradient_scale:
        return factor
    return factor - step_size * (np.linalg.norm(factor) / norm) * gradient


def _resolve_source(source: SourceBases | TruncatedSvd, init, spec: FitSpec):
    if isinstance(source, TruncatedSvd):
        if source.rank != spec.rank:
            raise DimensionMismatch("source decomposition rank", spec.rank, source.rank)
        bases = source.bases()
        if init is None:
            init = source.scaled_factors()
    else:
        bases = source
        if bases.rank != spec.rank:
            raise DimensionMismatch("source bases rank", spec.rank, bases.rank)
        if init is None:
            raise ConfigError(
                ["initial factors are required when only source bases are given "
                 "(pass the source TruncatedSvd to use Û₁Λ̂₁^½, V̂₁Λ̂₁^½)"]
            )
    U0, V0 = (np.array(f, dtype=float) for f in init)
    return bases, U0, V0


def fit(
    Y0,
    source: SourceBases | TruncatedSvd,
    spec: FitSpec,
    init: tuple[np.ndarray, np.ndarray] | None = None,
) -> FitResult:
    """
    Run the alternating normalized-gradient descent for the LEARNER objective.

    Each outer iteration updates U with a step of length c·‖U‖_F along the
    negative gradient, then V likewise using the updated U, and records
    ε_t = f(U⁽ᵗ⁾, V⁽ᵗ⁾). The loop stops when |ε_t - ε_{t-1}| < tol, at
    max_iter, or when ε_t > divergence_factor·ε₀ (or is not finite). A factor
    whose gradient is numerically zero stays where it is.

    The step length does not shrink with the gradient, so a very large λ₁
    makes the first step leave the source spans by about c·‖U‖_F and the
    run diverges. The best iterate is then the initializer, which for the
    default initialization is the rank-r truncation of Y₁; the exact
    span-constrained minimizer is d_learner.

    Args:
        Y0: Target matrix (array for the fully observed path, or ObservedMatrix)
        source: Source TruncatedSvd (supplies bases and the default
            initialization Û₁Λ̂₁^½, V̂₁Λ̂₁^½) or bare SourceBases
        spec: Penalties, step size and stopping rules
        init: Optional explicit (U⁽⁰⁾, V⁽⁰⁾)

    Returns:
        FitResult holding the iterate with the smallest recorded objective
        (earliest on ties, possibly the initializer)

    Raises:
        ConfigError: When only bases are given without an initializer
        DimensionMismatch: When shapes are inconsistent
    """
    bases, U, V = _resolve_source(source, init, spec)
    problem = _Problem(Y0, bases, spec)
    problem.check_factors(U, V)

    eps0 = problem.objective(U, V)
    trajectory = [eps0 if np.isfinite(eps0) else np.inf]
    best_t, best_U, best_V = 0, U.copy(), V.copy()
    termination = Termination.MAX_ITER

    logger.debug(
        f"Fit start: rank={spec.rank}, penalties={spec.penalties}, "
        f"step={spec.step_size}, eps0={eps0:.6g}"
    )

    l1_row, l1_col, _ = spec.penalties
    if not np.isfinite(eps0):
        termination = Termination.DIVERGED
    else:
        for t in range(1, spec.max_iter + 1):
            U = normalized_step(U, problem.grad_u(U, V), spec.step_size, problem.gradient_scale(U, V, l1_row))
            V = normalized_step(V, problem.grad_v(U, V), spec.step_size, problem.gradient_scale(V, U, l1_col))
            eps = problem.objective(U, V)

            if not np.isfinite(eps):
                trajectory.append(np.inf)
                termination = Termination.DIVERGED
                break

            trajectory.append(eps)
            logger.debug(f"Iteration {t}: eps={eps:.10g}")

            if eps < trajectory[best_t]:
                best_t, best_U, best_V = t, U.copy(), V.copy()
            if eps > spec.divergence_factor * eps0:
                termination = Termination.DIVERGED
                break
            if abs(eps - trajectory[t - 1]) < spec.tol:
                termination = Termination.CONVERGED
                break

    result = FitResult(
        U_best=best_U,
        V_best=best_V,
        objective_trajectory=[float(e) for e in trajectory],
        t_best=best_t,
        termination=termination,
        spec=spec,
    )
    logger.debug(
        f"Fit finished: termination={termination.value}, iterations={result.iterations}, "
        f"t_best={best_t}, eps_best={result.best_objective:.6g}"
    )
    return result
