import logging
import os
import sys
from typing import Optional

LOGGER_NAME = "fastqz"
LEVEL_ENV = "FASTQZ_LOG_LEVEL"
_FORMAT = "%(asctime)s:%(levelname)s:%(name)s:%(message)s"


def _configure(logger: logging.Logger) -> None:
    """Split output at ERROR: lower levels to stdout, the rest to stderr."""
    formatter = logging.Formatter(_FORMAT)

    stdout_handler = logging.StreamHandler(sys.stdout)
    stdout_handler.addFilter(lambda record: record.levelno < logging.ERROR)
    stdout_handler.setFormatter(formatter)
    logger.addHandler(stdout_handler)

    stderr_handler = logging.StreamHandler(sys.stderr)
    stderr_handler.addFilter(lambda record: record.levelno >= logging.ERROR)
    stderr_handler.setFormatter(formatter)
    logger.addHandler(stderr_handler)

    level = os.environ.get(LEVEL_ENV)
    if level:
        try:
            logger.setLevel(level.upper())
        except ValueError:
            logger.warning("Ignoring %s=%s", LEVEL_ENV, level)


def get_solver_logger(module_name: Optional[str] = None) -> logging.Logger:
    """Provides the package logger, or a child of it for one module.

    Handlers live on the ``fastqz`` logger only; children propagate to it
    and inherit its level, so ``--verbose`` in the command line reaches
    every module. FASTQZ_LOG_LEVEL sets the initial level.

    Args:
        module_name: dotted module name, usually ``__name__``

    Returns:
        A logger object
    """
    root = logging.getLogger(LOGGER_NAME)
    if not root.handlers:
        root.propagate = False
        _configure(root)

    if module_name is None or module_name == LOGGER_NAME:
        return root
    if not module_name.startswith(LOGGER_NAME + "."):
        module_name = f"{LOGGER_NAME}.{module_name}"
    return logging.getLogger(module_name)
