import logging
import os
import sys

from config import LOG_ENV_VAR

LOG_FORMAT = "[%(asctime)s] %(levelname)s %(name)s: %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

LEVELS = {
    "error": logging.ERROR,
    "warning": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

_configured = False


def get_logger(name):
    return logging.getLogger(f"convlab.{name}" if not name.startswith("convlab") else name)


def configure_logging(level_name=None):
    """Configure the convlab logger tree once, from the argument or CONVLAB_LOG."""
    global _configured
    level_name = (level_name or os.environ.get(LOG_ENV_VAR, "warning")).strip().lower()
    level = LEVELS.get(level_name, logging.WARNING)

    root = logging.getLogger("convlab")
    root.setLevel(level)
    if not _configured:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))
        root.addHandler(handler)
        root.propagate = False
        _configured = True
    return level_name


def is_debug():
    return logging.getLogger("convlab").isEnabledFor(logging.DEBUG)
