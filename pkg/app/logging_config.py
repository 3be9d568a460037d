"""
Application logging configuration.

All modules share the "learner" logger. Records go to stderr so that
command results printed on stdout stay machine-readable.
"""
import logging
import sys

from app.config import settings


def setup_logging() -> logging.Logger:
    """
    Configure and return the application logger.

    The logger outputs to stderr with a structured format including:
    - Timestamp
    - Logger name
    - Log level
    - Message

    Returns:
        logging.Logger: Configured logger instance
    """
    logger = logging.getLogger("learner")

    # Prevent duplicate handlers if called multiple times
    if not logger.handlers:
        logger.setLevel(settings.LOG_LEVEL)

        console_handler = logging.StreamHandler(sys.stderr)
        formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
        )
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    return logger
