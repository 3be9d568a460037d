"""`analyze`: contribution scores, scree values, varimax and projection blocks."""
import argparse
from pathlib import Path

import numpy as np
import pandas as pd

from app.cli.common import add_run_args, finish, load_matrix, validated
from app.exceptions import ConfigError, DimensionMismatch
from app.logging_config import setup_logging
from app.schemas.run_config import RankConfig, RunConfig
from app.services.analysis import (
    ProjectionBlocks,
    contribution_scores,
    estimate_bases,
    projection_gram,
    scree_values,
    top_contributors,
    varimax,
)
from app.storage import read_labels, write_matrix, write_table
from app.utils.rng import StreamRole, child_rng

logger = setup_logging()


def register(subparsers) -> None:
    parser = subparsers.add_parser("analyze", help="Interpret the latent factors of an estimate")
    parser.add_argument("--input", type=Path, required=True, help="Fully observed estimate or source matrix")
    parser.add_argument("--rank", type=int, required=True, help="Number of latent factors to score")
    parser.add_argument("--scree", type=int, metavar="K", help="Also write the first K singular values")
    parser.add_argument("--varimax", action="store_true", help="Rotate the column factors before scoring")
    parser.add_argument("--top", type=int, metavar="N", help="Also write the N top contributors of every factor")
    parser.add_argument("--row-labels", type=Path, help="One label per row of the input")
    parser.add_argument("--col-labels", type=Path, help="One label per column of the input")
    parser.add_argument(
        "--reference",
        type=Path,
        help="Second matrix whose rank-r projection matrices are compared with the input's",
    )
    parser.add_argument(
        "--subset-size",
        type=int,
        help="Number of randomly chosen rows of the row-space projections to tabulate (default: all)",
    )
    parser.add_argument("--seed", type=int, default=0, help="Seed of the row subset")
    add_run_args(parser)
    parser.set_defaults(handler=run_analyze)


def _labels(path: Path | None, expected: int, what: str) -> list[str] | None:
    if path is None:
        return None
    labels = read_labels(path)
    if len(labels) != expected:
        raise DimensionMismatch(what, (expected,), (len(labels),))
    return labels


def projection_table(blocks: ProjectionBlocks) -> pd.DataFrame:
    """Long form of two projection blocks: one row per (i, j) pair of the subset."""
    i, j = np.meshgrid(blocks.indices, blocks.indices, indexing="ij")
    return pd.DataFrame(
        {
            "i": i.ravel(),
            "j": j.ravel(),
            "input": blocks.block_a.ravel(),
            "reference": blocks.block_b.ravel(),
            "difference": blocks.difference.ravel(),
        }
    )


def _row_subset(p: int, size: int | None, seed: int) -> np.ndarray | None:
    if size is None or size >= p:
        return None
    if size < 1:
        raise ConfigError([f"--subset-size must be positive, got {size}"])
    return np.sort(child_rng(seed, 0, StreamRole.SUBSET).choice(p, size=size, replace=False))


def run_analyze(options: argparse.Namespace) -> None:
    theta = load_matrix(options.input)
    p, q = theta.shape
    row_labels = _labels(options.row_labels, p, "row labels")
    col_labels = _labels(options.col_labels, q, "column labels")
    if options.top is not None and options.top < 1:
        raise ConfigError([f"--top must be positive, got {options.top}"])

    config = validated(
        RunConfig,
        command="analyze",
        inputs={
            key: str(value)
            for key, value in {
                "input": options.input,
                "reference": options.reference,
                "row_labels": options.row_labels,
                "col_labels": options.col_labels,
            }.items()
            if value is not None
        },
        out_dir=str(options.out_dir),
        seed=options.seed,
        threads=options.threads,
        rank=validated(RankConfig, strategy="fixed", rank=options.rank),
        options={
            "scree": options.scree,
            "varimax": options.varimax,
            "top": options.top,
            "subset_size": options.subset_size,
        },
    )

    out = options.out_dir
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    data = {"rank": options.rank}

    bases = estimate_bases(theta, options.rank)
    col_basis = bases.V
    if options.varimax:
        rotation = varimax(bases.V)
        col_basis = rotation.rotated
        outputs.append(out / "varimax_rotation.csv")
        write_matrix(rotation.rotation, outputs[-1])
        data["varimax"] = {
            "criterion": rotation.criterion,
            "iterations": rotation.iterations,
            "converged": rotation.converged,
        }

    row_scores = contribution_scores(bases.U, axis="row")
    col_scores = contribution_scores(col_basis, axis="column")
    outputs.append(write_table(row_scores.to_frame(row_labels), out / "row_scores.csv"))
    outputs.append(write_table(col_scores.to_frame(col_labels), out / "col_scores.csv"))

    if options.top is not None:
        outputs.append(write_table(top_contributors(row_scores, options.top, row_labels), out / "row_top.csv"))
        outputs.append(write_table(top_contributors(col_scores, options.top, col_labels), out / "col_top.csv"))

    if options.scree is not None:
        values = scree_values(theta, options.scree)
        scree = pd.DataFrame({"index": np.arange(1, values.shape[0] + 1), "singular_value": values})
        outputs.append(write_table(scree, out / "scree.csv"))

    if options.reference is not None:
        reference = load_matrix(options.reference)
        if reference.shape != theta.shape:
            raise DimensionMismatch("reference", theta.shape, reference.shape)
        ref_bases = estimate_bases(reference, options.rank)
        subset = _row_subset(p, options.subset_size, options.seed)
        row_blocks = projection_gram(bases.U, ref_bases.U, subset)
        col_blocks = projection_gram(bases.V, ref_bases.V)
        outputs.append(write_table(projection_table(row_blocks), out / "projection_rows.csv"))
        outputs.append(write_table(projection_table(col_blocks), out / "projection_cols.csv"))
        data["projection_difference"] = {
            "rows": float(np.linalg.norm(row_blocks.difference)),
            "columns": float(np.linalg.norm(col_blocks.difference)),
        }

    logger.info(f"Analyzed rank-{options.rank} factors of {options.input} ({len(outputs)} tables)")
    finish(config, outputs, data)
