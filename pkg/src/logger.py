"""Configure a custom logger."""

import logging
import sys

LOGGER_NAME = "tunnelsplit"


def configure_logger(level: str | int = logging.INFO) -> logging.Logger:
    """Configure the application logger to write diagnostics to stderr."""
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)

    # Diagnostics go to stderr; stdout is reserved for primary output
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    console_handler.setFormatter(formatter)

    # At most one handler, however often this runs
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.addHandler(console_handler)

    logger.propagate = False
    return logger
