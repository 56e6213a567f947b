import logging
import sys
import warnings
from logging.handlers import RotatingFileHandler
from typing import TextIO, Union

from qbicladder.errors import QbicWarning

stream_log_format = "%(message)s"
file_log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
cli_log_format = "%(asctime)s - %(levelname)s - %(message)s"
iso8601_datefmt = "%Y-%m-%dT%H:%M:%S%z"

# handler installed by the last configure_logger call
current_handler = None


def validate_level(level: Union[int, str]) -> int:
    """
    Return the numeric logging level for a name such as ``"debug"`` or an int.
    """
    if isinstance(level, bool):
        raise ValueError(f"Bad logging level: {level}")
    if isinstance(level, int):
        return level
    if isinstance(level, str):
        levelno = logging.getLevelName(level.strip().upper())
        if isinstance(levelno, int):
            return levelno
    raise ValueError(f"Bad logging level: {level}")


def make_handler(file: Union[str, TextIO] = sys.stdout, level="INFO") -> logging.Handler:
    """
    Stream handler for open streams, rotating file handler for paths.
    """
    if isinstance(file, str):
        handler = RotatingFileHandler(file, maxBytes=100000, backupCount=10)
        fmt = file_log_format
    else:
        handler = logging.StreamHandler(file)
        fmt = stream_log_format

    handler.setLevel(validate_level(level))
    handler.setFormatter(logging.Formatter(fmt, datefmt=iso8601_datefmt))
    return handler


def configure_logger(
    logger_name: str = "qbicladder", file: Union[str, TextIO] = sys.stdout, level="INFO"
) -> logging.Handler:
    """
    Attach a single handler to the package logger, replacing the one installed
    by a previous call.

    Parameters
    ----------
    logger_name : str
        Logger to configure, the package root by default.
    file : str or stream
        A path selects a rotating log file; streams are written to directly.
    level : int or str
        Threshold of the handler; the logger level is lowered to it if needed.

    Returns
    -------
    logging.Handler
    """
    global current_handler

    logger = logging.getLogger(logger_name)
    handler = make_handler(file, level)

    if current_handler is not None and current_handler in logger.handlers:
        logger.removeHandler(current_handler)
        current_handler.close()

    logger.addHandler(handler)
    levelno = validate_level(level)
    if logger.getEffectiveLevel() > levelno:
        logger.setLevel(levelno)

    current_handler = handler
    return handler


def configure_cli_logging(verbose: bool = False) -> None:
    """
    Diagnostics to stderr for the command line tool; data stays on stdout.

    Package warnings (horizon violations, poor fits) are routed through the
    ``py.warnings`` logger so they share the same stream and format.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=cli_log_format,
        stream=sys.stderr,
    )
    logging.captureWarnings(True)
    warnings.simplefilter("always", QbicWarning)
