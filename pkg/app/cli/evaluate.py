"""`evaluate`: holdout comparison of the estimators on a target/source pair."""
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
    validated,
)
from app.cli.fit import add_penalty_args, fit_spec, penalties
from app.exceptions import ConfigError
from app.schemas.run_config import RunConfig
from app.services.evaluation import COMPARISON_FOLDS, compare_methods
from app.storage import write_table


def register(subparsers) -> None:
    parser = subparsers.add_parser("evaluate", help="Compare the estimators on held-out target entries")
    parser.add_argument("--y0", type=Path, required=True, help="Target matrix")
    parser.add_argument("--y1", type=Path, required=True, help="Source matrix (fully observed)")
    parser.add_argument("--folds", type=int, default=COMPARISON_FOLDS)
    parser.add_argument("--seed", type=int, default=0, help="Seed of the fold partition")
    add_penalty_args(parser)
    add_fit_args(parser)
    add_rank_args(parser)
    add_impute_arg(parser)
    add_run_args(parser)
    parser.set_defaults(handler=run_evaluate)


def run_evaluate(options: argparse.Namespace) -> None:
    if options.folds < 2:
        raise ConfigError([f"--folds must be at least 2, got {options.folds}"])
    lambdas = penalties(options)
    ranks = rank_config(options)
    config = validated(
        RunConfig,
        command="evaluate",
        inputs={"y0": str(options.y0), "y1": str(options.y1)},
        out_dir=str(options.out_dir),
        seed=options.seed,
        threads=options.threads,
        impute_zero=options.impute_zero,
        rank=ranks,
        fit=fit_spec(options, lambdas),
        options={"folds": options.folds},
    )

    Y0 = load_matrix(options.y0, options.impute_zero)
    Y1 = load_matrix(options.y1, options.impute_zero)
    source, selection = resolve_source(Y1, ranks)
    config = bind_rank(config, source.rank)

    table = compare_methods(
        Y0, source, lambdas, config.fit, k=options.folds, seed=options.seed, n_jobs=options.threads
    )
    out = options.out_dir
    out.mkdir(parents=True, exist_ok=True)
    outputs = [write_table(table, out / "comparison.csv")]
    finish(
        config,
        outputs,
        {
            "rank": source.rank,
            "rank_threshold": selection.threshold if selection else None,
            "mean_mse": table.groupby("method", sort=False)["mse"].mean().to_dict(),
        },
    )
