"""`dlearner`: the tuning-free projection estimator."""
import argparse
from pathlib import Path

from app.cli.common import (
    add_impute_arg,
    add_rank_args,
    add_run_args,
    finish,
    load_matrix,
    rank_config,
    resolve_source,
    validated,
)
from app.config import settings
from app.exceptions import ConfigError
from app.schemas.run_config import RunConfig
from app.services.dlearner import d_learner_missing
from app.storage import write_matrix


def register(subparsers) -> None:
    parser = subparsers.add_parser("dlearner", help="Project the target onto the source latent spaces")
    parser.add_argument("--y0", type=Path, required=True, help="Target matrix")
    parser.add_argument("--y1", type=Path, required=True, help="Source matrix (fully observed)")
    parser.add_argument(
        "--completion-tol",
        type=float,
        default=settings.COMPLETION_TOL,
        help="Tolerance of the rank-r completion used when the target has missing entries",
    )
    parser.add_argument("--completion-max-iter", type=int, default=settings.COMPLETION_MAX_ITER)
    add_rank_args(parser)
    add_impute_arg(parser)
    add_run_args(parser)
    parser.set_defaults(handler=run_dlearner)


def run_dlearner(options: argparse.Namespace) -> None:
    ranks = rank_config(options)
    if options.completion_tol <= 0 or options.completion_max_iter < 1:
        raise ConfigError(
            [f"completion needs a positive tolerance and iteration count, got "
             f"{options.completion_tol} and {options.completion_max_iter}"]
        )
    config = validated(
        RunConfig,
        command="dlearner",
        inputs={"y0": str(options.y0), "y1": str(options.y1)},
        out_dir=str(options.out_dir),
        threads=options.threads,
        impute_zero=options.impute_zero,
        rank=ranks,
        options={
            "completion_tol": options.completion_tol,
            "completion_max_iter": options.completion_max_iter,
        },
    )

    Y0 = load_matrix(options.y0, options.impute_zero)
    Y1 = load_matrix(options.y1, options.impute_zero)
    source, selection = resolve_source(Y1, ranks)

    theta_hat = d_learner_missing(
        Y0, source.bases(), source.rank, options.completion_tol, options.completion_max_iter
    )

    out = options.out_dir
    out.mkdir(parents=True, exist_ok=True)
    outputs = [out / "theta.csv"]
    write_matrix(theta_hat, outputs[0])
    finish(
        config,
        outputs,
        {
            "rank": source.rank,
            "rank_threshold": selection.threshold if selection else None,
            "completed": not Y0.is_complete,
        },
    )
