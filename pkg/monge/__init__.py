"""
Linear and convolutional Monge map estimation, domain adaptation and the
Monte-Carlo harness that measures both.
"""

import logging
import sys

from monge.config import Config

__version__ = '0.1.0'

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def configure_logging(level=None):
    """Attach a single stderr handler to the package logger"""
    logger = logging.getLogger(__name__)
    level = level or Config.LOG_LEVEL
    logger.setLevel(level.upper() if isinstance(level, str) else level)

    # Replace any handler installed by an earlier call
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)
    logger.propagate = False
    return logger
