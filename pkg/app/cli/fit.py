"""`fit`: LEARNER with explicit penalties."""
import argparse
from pathlib import Path

from app.cli.common import (
    add_fit_args,
    add_impute_arg,
    add_rank_args,
    add_run_args,
    bind_rank,
    finish,
    load_matrix,
    rank_config,
    resolve_source,
    trajectory_table,
    validated,
)
from app.exceptions import ConfigError
from app.logging_config import setup_logging
from app.schemas.fit import FitSpec
from app.schemas.run_config import RunConfig
from app.services.learner import fit
from app.storage import write_matrix, write_table

logger = setup_logging()


def add_penalty_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("penalties")
    group.add_argument("--lambda1", type=float, help="Shared row and column space penalty λ₁")
    group.add_argument("--lambda1-row", type=float, help="Row space penalty λ₁,₁ (overrides --lambda1)")
    group.add_argument("--lambda1-col", type=float, help="Column space penalty λ₁,₂ (overrides --lambda1)")
    group.add_argument("--lambda2", type=float, required=True, help="Balance penalty λ₂")


def penalties(options: argparse.Namespace) -> tuple[float, float, float]:
    row = options.lambda1_row if options.lambda1_row is not None else options.lambda1
    col = options.lambda1_col if options.lambda1_col is not None else options.lambda1
    if row is None or col is None:
        raise ConfigError(["give --lambda1 or both --lambda1-row and --lambda1-col"])
    return row, col, options.lambda2


def fit_spec(options: argparse.Namespace, lambdas=(0.0, 0.0, 0.0)) -> FitSpec:
    """Validate the optimiser options; the rank stays provisional until Y1 is decomposed."""
    return validated(
        FitSpec,
        rank=options.rank or 1,
        lambda1_row=lambdas[0],
        lambda1_col=lambdas[1],
        lambda2=lambdas[2],
        step_size=options.step,
        max_iter=options.max_iter,
        tol=options.tol,
        divergence_factor=options.divergence_factor,
    )


def register(subparsers) -> None:
    parser = subparsers.add_parser("fit", help="Fit LEARNER with explicit penalties")
    parser.add_argument("--y0", type=Path, required=True, help="Target matrix")
    parser.add_argument("--y1", type=Path, required=True, help="Source matrix (fully observed)")
    add_penalty_args(parser)
    add_fit_args(parser)
    add_rank_args(parser)
    add_impute_arg(parser)
    add_run_args(parser)
    parser.set_defaults(handler=run_fit)


def run_fit(options: argparse.Namespace) -> None:
    lambdas = penalties(options)
    ranks = rank_config(options)
    config = validated(
        RunConfig,
        command="fit",
        inputs={"y0": str(options.y0), "y1": str(options.y1)},
        out_dir=str(options.out_dir),
        threads=options.threads,
        impute_zero=options.impute_zero,
        rank=ranks,
        fit=fit_spec(options, lambdas),
    )

    Y0 = load_matrix(options.y0, options.impute_zero)
    Y1 = load_matrix(options.y1, options.impute_zero)
    source, selection = resolve_source(Y1, ranks)
    config = bind_rank(config, source.rank)

    result = fit(Y0, source, config.fit)
    logger.info(
        f"Fit finished: termination={result.termination.value}, iterations={result.iterations}, "
        f"t_best={result.t_best}, eps0={result.objective_trajectory[0]:.6g}, "
        f"eps_best={result.best_objective:.6g}"
    )

    out = options.out_dir
    out.mkdir(parents=True, exist_ok=True)
    outputs = [out / "theta.csv", out / "U.csv", out / "V.csv", out / "trajectory.csv"]
    write_matrix(result.theta_hat, outputs[0])
    write_matrix(result.U_best, outputs[1])
    write_matrix(result.V_best, outputs[2])
    write_table(trajectory_table(result.objective_trajectory), outputs[3])

    finish(
        config,
        outputs,
        {
            "rank": source.rank,
            "rank_threshold": selection.threshold if selection else None,
            "termination": result.termination.value,
            "iterations": result.iterations,
            "t_best": result.t_best,
            "best_objective": result.best_objective,
        },
    )
