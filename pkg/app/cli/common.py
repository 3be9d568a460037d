"""
Helpers shared by the command modules: argument groups, input loading,
rank resolution and result emission.
"""
import argparse
import sys
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from app.config import settings
from app.exceptions import ConfigError
from app.logging_config import setup_logging
from app.schemas.common import CommandResponse
from app.schemas.run_config import RankConfig, RunConfig
from app.services.matrix_core import ObservedMatrix, TruncatedSvd, truncated_svd
from app.services.rank_select import RankSelection, default_upper_bound, parse_strategy, select_rank
from app.storage import read_matrix, write_manifest

logger = setup_logging()


def validated(model: type[BaseModel], **fields) -> BaseModel:
    """Build a pydantic record, turning validation failures into ConfigError."""
    try:
        return model(**{key: value for key, value in fields.items() if value is not None})
    except ValidationError as e:
        raise ConfigError(
            [f"{'.'.join(str(part) for part in err['loc']) or model.__name__}: {err['msg']}" for err in e.errors()]
        ) from e


def step_size(value: str) -> float:
    """argparse type: a positive number or a named step preset."""
    if value.lower() in settings.STEP_PRESETS:
        return settings.STEP_PRESETS[value.lower()]
    try:
        step = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a number or one of {sorted(settings.STEP_PRESETS)}, got {value!r}"
        )
    if step <= 0:
        raise argparse.ArgumentTypeError(f"step size must be positive, got {value!r}")
    return step


def add_run_args(parser: argparse.ArgumentParser, out_dir_required: bool = True) -> None:
    parser.add_argument(
        "--out-dir",
        type=Path,
        required=out_dir_required,
        help="Directory receiving the outputs and manifest.json",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=settings.DEFAULT_THREADS,
        help="Worker count (-1: all logical cores); never affects results",
    )
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")


def add_impute_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--impute-zero",
        action="store_true",
        help="Replace missing input entries by 0 instead of treating them as missing",
    )


def add_rank_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("rank")
    group.add_argument("--rank", type=int, help="Use this rank instead of selecting one from Y1")
    group.add_argument(
        "--strategy",
        choices=["screenot", "gap"],
        default="screenot",
        help="Rank selection strategy applied to Y1 when --rank is not given",
    )
    group.add_argument(
        "--upper-bound",
        type=int,
        help="Loose rank upper bound (default: floor(min(p, q)/3), capped)",
    )


def add_fit_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("optimiser")
    group.add_argument(
        "--step",
        type=step_size,
        required=True,
        help=f"Step size c, a number or one of {sorted(settings.STEP_PRESETS)}",
    )
    group.add_argument("--max-iter", type=int, default=settings.FIT_MAX_ITER)
    group.add_argument("--tol", type=float, default=settings.FIT_TOL)
    group.add_argument("--divergence-factor", type=float, default=settings.FIT_DIVERGENCE_FACTOR)


def load_matrix(path: Path, impute_zero: bool = False) -> ObservedMatrix:
    matrix = read_matrix(path)
    if impute_zero and not matrix.is_complete:
        logger.info(f"Imputing {matrix.values.size - matrix.n_observed} missing entries of {path} by 0")
        return ObservedMatrix.complete(matrix.values)
    return matrix


def rank_config(options: argparse.Namespace) -> RankConfig:
    strategy = "fixed" if options.rank is not None else options.strategy
    return validated(RankConfig, strategy=strategy, rank=options.rank, upper_bound=options.upper_bound)


def resolve_source(Y1: ObservedMatrix, config: RankConfig) -> tuple[TruncatedSvd, RankSelection | None]:
    """Select the rank (unless fixed) and return the rank-r truncated SVD of Y1."""
    if config.strategy == "fixed":
        return truncated_svd(Y1, config.rank), None
    upper_bound = config.upper_bound or default_upper_bound(*Y1.shape)
    selection = select_rank(Y1, upper_bound, parse_strategy(config.strategy))
    return truncated_svd(Y1, selection.rank), selection


def bind_rank(config: RunConfig, rank: int) -> RunConfig:
    """Record the rank resolved from Y1 in the fit settings of a validated run."""
    return config.model_copy(update={"fit": config.fit.with_rank(rank)})


def finish(config: RunConfig, outputs: list[Path], data: dict[str, Any]) -> None:
    """Write the manifest beside the outputs and print the result envelope on stdout."""
    if config.out_dir is not None:
        manifest = write_manifest(
            config.out_dir,
            config.command,
            config.model_dump(mode="json"),
            outputs,
            seed=config.seed,
        )
        data = {**data, "manifest": str(manifest)}
    sys.stdout.write(CommandResponse[dict[str, Any]](data=data).model_dump_json() + "\n")


def trajectory_table(trajectory: list[float]) -> pd.DataFrame:
    return pd.DataFrame({"t": np.arange(len(trajectory)), "objective": trajectory})
