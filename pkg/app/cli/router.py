import argparse

from app.cli import analyze, dlearner, evaluate, fit, rank, select, simulate
from app.exceptions import ConfigError


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as ConfigError instead of exiting."""

    def error(self, message: str):
        raise ConfigError([f"{self.prog}: {message}"])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="learner", description="Transfer of low-rank latent spaces from a source to a target matrix")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fit.register(subparsers)
    select.register(subparsers)
    dlearner.register(subparsers)
    rank.register(subparsers)
    simulate.register(subparsers)
    analyze.register(subparsers)
    evaluate.register(subparsers)
    return parser
