"""`rank`: select the number of latent factors of a source matrix."""
import argparse
from pathlib import Path

import pandas as pd

from app.cli.common import add_impute_arg, add_run_args, finish, load_matrix, validated
from app.exceptions import ConfigError
from app.schemas.run_config import RankConfig, RunConfig
from app.services.rank_select import default_upper_bound, parse_strategy, select_rank
from app.storage import write_table


def register(subparsers) -> None:
    parser = subparsers.add_parser("rank", help="Select the rank of a fully observed matrix")
    parser.add_argument("--input", type=Path, required=True, help="Source matrix")
    parser.add_argument("--upper-bound", type=int, help="Loose rank upper bound (default: floor(min(p, q)/3), capped)")
    parser.add_argument("--strategy", choices=["screenot", "gap", "fixed"], default="screenot")
    parser.add_argument("--rank", type=int, help="Rank returned by the fixed strategy")
    add_impute_arg(parser)
    add_run_args(parser, out_dir_required=False)
    parser.set_defaults(handler=run_rank)


def run_rank(options: argparse.Namespace) -> None:
    Y = load_matrix(options.input, options.impute_zero)
    upper_bound = options.upper_bound or default_upper_bound(*Y.shape)
    ranks = validated(RankConfig, strategy=options.strategy, rank=options.rank, upper_bound=upper_bound)
    try:
        strategy = parse_strategy(ranks.strategy, ranks.rank)
    except ValueError as e:
        raise ConfigError([str(e)]) from e

    selection = select_rank(Y, upper_bound, strategy)
    config = validated(
        RunConfig,
        command="rank",
        inputs={"input": str(options.input)},
        out_dir=str(options.out_dir) if options.out_dir else None,
        threads=options.threads,
        impute_zero=options.impute_zero,
        rank=ranks,
    )

    outputs = []
    if options.out_dir is not None:
        options.out_dir.mkdir(parents=True, exist_ok=True)
        scree = pd.DataFrame(
            {
                "index": range(1, selection.singular_values.shape[0] + 1),
                "singular_value": selection.singular_values,
                "retained": [i < selection.rank for i in range(selection.singular_values.shape[0])],
            }
        )
        outputs.append(write_table(scree, options.out_dir / "scree.csv"))

    finish(
        config,
        outputs,
        {
            "rank": selection.rank,
            "strategy": selection.strategy,
            "upper_bound": selection.upper_bound,
            "threshold": selection.threshold,
        },
    )
