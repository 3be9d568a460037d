"""
Command-line entry point.

Dispatches to the subcommand handlers and turns toolkit errors into a JSON
error body on stderr plus the family exit code.
"""
import logging
import sys

from app.cli.router import build_parser
from app.exceptions import LearnerError, NumericError
from app.logging_config import setup_logging
from app.schemas.common import ErrorResponse

logger = setup_logging()


def _report(error: str, message: str) -> None:
    sys.stderr.write(ErrorResponse(error=error, message=message).model_dump_json() + "\n")


def run(argv: list[str] | None = None) -> int:
    """
    Parse `argv` and run the selected command.

    Returns:
        0 on success, 2 for usage errors, 3 for data errors, 4 for numeric failures
    """
    try:
        options = build_parser().parse_args(argv)
    except LearnerError as e:
        _report(e.error, str(e))
        return e.exit_code
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else 0

    level = logger.level
    if options.verbose:
        logger.setLevel(logging.DEBUG)

    try:
        options.handler(options)
    except LearnerError as e:
        logger.error(f"{options.command} failed: {e}")
        _report(e.error, str(e))
        return e.exit_code
    except Exception as e:
        # Log detailed error for debugging (includes stack trace)
        logger.error(f"Unhandled exception: {e.__class__.__name__}: {e}", exc_info=True)
        _report(NumericError.error, "An unexpected error occurred")
        return NumericError.exit_code
    finally:
        logger.setLevel(level)
    return 0
