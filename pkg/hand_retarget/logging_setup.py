"""
Logging configuration shared by the CLI and the batch workers
"""

import logging
import os
from typing import Optional

PACKAGE_LOGGER = 'hand_retarget'
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> logging.Logger:
    """
    Configure the package logger.

    Args:
        level: Level name; falls back to HAND_RETARGET_LOG_LEVEL, then INFO
        log_file: Optional path for a full DEBUG log; falls back to
            HAND_RETARGET_LOG_FILE

    Returns:
        The configured package logger
    """
    level_name = (level or os.environ.get('HAND_RETARGET_LOG_LEVEL', 'INFO')).upper()
    log_file = log_file or os.environ.get('HAND_RETARGET_LOG_FILE')

    logger = logging.getLogger(PACKAGE_LOGGER)
    logger.setLevel(logging.DEBUG)
    logger.propagate = False

    # Re-running (tests, worker processes) must not stack handlers
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT)

    console = logging.StreamHandler()
    console.setLevel(getattr(logging, level_name, logging.INFO))
    console.setFormatter(formatter)
    logger.addHandler(console)

    if log_file:
        fh = logging.FileHandler(log_file)
        fh.setLevel(logging.DEBUG)
        fh.setFormatter(formatter)
        logger.addHandler(fh)

    return logger
