import logging
import sys
from pathlib import Path

ROOT_LOGGER = "sixvlab"
DEFAULT_FORMAT = (
    "%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s"
)


def _resolve_level(level: str | int) -> int:
    if isinstance(level, int):
        return level
    return getattr(logging, level.upper(), logging.INFO)


def _attach(logger: logging.Logger, handler: logging.Handler, formatter: logging.Formatter) -> None:
    handler.setLevel(logger.level)
    handler.setFormatter(formatter)
    logger.addHandler(handler)


def setup_logger(
    name: str = ROOT_LOGGER,
    level: str | int = "INFO",
    log_file: str | Path | None = None,
    console_output: bool = True,
    format_string: str | None = None,
) -> logging.Logger:
    """
    Set up a logger for the sixvlab library.

    Any handlers already on the logger are replaced.

    Args:
        name: Logger name
        level: Logging level (string or int)
        log_file: Optional file path for logging, parent directories are created
        console_output: Whether to log to stderr (stdout carries result tables)
        format_string: Custom format string for logs

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(_resolve_level(level))
    logger.handlers.clear()

    formatter = logging.Formatter(format_string or DEFAULT_FORMAT)
    if console_output:
        _attach(logger, logging.StreamHandler(sys.stderr), formatter)
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        _attach(logger, logging.FileHandler(log_path), formatter)

    logger.propagate = False
    return logger


def get_logger(name: str = ROOT_LOGGER) -> logging.Logger:
    """
    Get a logger in the sixvlab hierarchy.

    Child loggers (``sixvlab.transfer`` and friends) propagate to the
    ``sixvlab`` root, which is configured at WARNING on first use. Names
    outside the hierarchy get their own handlers.
    """
    if not logging.getLogger(ROOT_LOGGER).handlers:
        setup_logger(ROOT_LOGGER, level="WARNING")

    logger = logging.getLogger(name)
    in_package = name == ROOT_LOGGER or name.startswith(ROOT_LOGGER + ".")
    if not in_package and not logger.handlers:
        logger = setup_logger(name)
    return logger
