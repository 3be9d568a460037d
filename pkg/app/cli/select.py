"""`cv-fit` and `ext-fit`: LEARNER with penalties selected over a grid."""
import argparse
from pathlib import Path

import pandas as pd
from pydantic import ValidationError

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
from app.cli.fit import fit_spec
from app.config import settings
from app.exceptions import ConfigError
from app.schemas.run_config import RunConfig
from app.schemas.selection import PenaltyGrid
from app.services.model_select import SelectionResult, cv_select, external_select
from app.storage import write_matrix, write_table


def add_grid_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("grid")
    group.add_argument(
        "--lambda1-range",
        type=float,
        nargs=2,
        metavar=("LOW", "HIGH"),
        default=(1e-4, 1e4),
        help="Bounds of the log-equispaced λ₁ grid",
    )
    group.add_argument(
        "--lambda2-range",
        type=float,
        nargs=2,
        metavar=("LOW", "HIGH"),
        default=(1e-4, 1e4),
        help="Bounds of the log-equispaced λ₂ grid",
    )
    group.add_argument("--grid-size", type=int, default=settings.GRID_SIZE, help="Points per grid axis")
    group.add_argument(
        "--separate-penalties",
        action="store_true",
        help="Search (λ₁,₁, λ₁,₂, λ₂) instead of (λ₁, λ₂)",
    )


def penalty_grid(options: argparse.Namespace) -> PenaltyGrid:
    for name, (low, high) in (("lambda1", options.lambda1_range), ("lambda2", options.lambda2_range)):
        if not 0 < low <= high:
            raise ConfigError([f"--{name}-range needs 0 < LOW <= HIGH, got {low} {high}"])
    try:
        return PenaltyGrid.log_grid(
            tuple(options.lambda1_range),
            tuple(options.lambda2_range),
            options.grid_size,
            separate_penalties=options.separate_penalties,
        )
    except ValidationError as e:
        raise ConfigError([err["msg"] for err in e.errors()]) from e


def selection_table(result: SelectionResult) -> pd.DataFrame:
    """One row per grid cell: the penalties, every fold's MSE and their mean."""
    frame = pd.DataFrame(result.cells, columns=["lambda1_row", "lambda1_col", "lambda2"])
    for fold in range(result.per_fold_mse.shape[1]):
        frame[f"mse_fold_{fold + 1}"] = result.per_fold_mse[:, fold]
    frame["mse_mean"] = result.per_cell_mse
    frame["selected"] = [i == result.best_index for i in range(len(result.cells))]
    return frame


def _register_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--y0", type=Path, required=True, help="Target matrix")
    parser.add_argument("--y1", type=Path, required=True, help="Source matrix (fully observed)")
    add_grid_args(parser)
    add_fit_args(parser)
    add_rank_args(parser)
    add_impute_arg(parser)
    add_run_args(parser)


def register(subparsers) -> None:
    cv = subparsers.add_parser("cv-fit", help="Select penalties by entry-holdout cross-validation")
    _register_common(cv)
    cv.add_argument("--folds", type=int, default=settings.CV_FOLDS)
    cv.add_argument("--seed", type=int, default=0, help="Seed of the fold partition")
    cv.set_defaults(handler=run_cv_fit)

    ext = subparsers.add_parser("ext-fit", help="Select penalties against an external target dataset")
    _register_common(ext)
    ext.add_argument("--y0-ext", type=Path, required=True, help="External target matrix")
    ext.set_defaults(handler=run_ext_fit)


def _write_selection(options, config: RunConfig, result: SelectionResult, rank_threshold) -> None:
    out = options.out_dir
    out.mkdir(parents=True, exist_ok=True)
    final = result.final_fit
    outputs = [out / "theta.csv", out / "trajectory.csv", out / "selection.csv"]
    write_matrix(final.theta_hat, outputs[0])
    write_table(trajectory_table(final.objective_trajectory), outputs[1])
    write_table(selection_table(result), outputs[2])

    finish(
        config,
        outputs,
        {
            "method": result.method,
            "rank": final.spec.rank,
            "rank_threshold": rank_threshold,
            "best_lambdas": list(result.best_lambdas),
            "best_mse": result.best_mse,
            "termination": final.termination.value,
            "iterations": final.iterations,
            "t_best": final.t_best,
        },
    )


def run_cv_fit(options: argparse.Namespace) -> None:
    if options.folds < 2:
        raise ConfigError([f"--folds must be at least 2, got {options.folds}"])
    ranks = rank_config(options)
    grid = penalty_grid(options)
    config = validated(
        RunConfig,
        command="cv-fit",
        inputs={"y0": str(options.y0), "y1": str(options.y1)},
        out_dir=str(options.out_dir),
        seed=options.seed,
        threads=options.threads,
        impute_zero=options.impute_zero,
        rank=ranks,
        fit=fit_spec(options),
        grid=grid,
        options={"folds": options.folds},
    )

    Y0 = load_matrix(options.y0, options.impute_zero)
    Y1 = load_matrix(options.y1, options.impute_zero)
    source, selection = resolve_source(Y1, ranks)
    config = bind_rank(config, source.rank)
    result = cv_select(Y0, source, grid, config.fit, seed=options.seed, n_jobs=options.threads, k=options.folds)
    _write_selection(options, config, result, selection.threshold if selection else None)


def run_ext_fit(options: argparse.Namespace) -> None:
    ranks = rank_config(options)
    grid = penalty_grid(options)
    config = validated(
        RunConfig,
        command="ext-fit",
        inputs={"y0": str(options.y0), "y1": str(options.y1), "y0_ext": str(options.y0_ext)},
        out_dir=str(options.out_dir),
        threads=options.threads,
        impute_zero=options.impute_zero,
        rank=ranks,
        fit=fit_spec(options),
        grid=grid,
    )

    Y0 = load_matrix(options.y0, options.impute_zero)
    Y1 = load_matrix(options.y1, options.impute_zero)
    Y0_ext = load_matrix(options.y0_ext)
    source, selection = resolve_source(Y1, ranks)
    config = bind_rank(config, source.rank)
    result = external_select(Y0, source, Y0_ext, grid, config.fit, n_jobs=options.threads)
    _write_selection(options, config, result, selection.threshold if selection else None)
