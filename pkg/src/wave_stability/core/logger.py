import logging

# Custom log format including only PID
LOG_FORMAT = "[%(asctime)s] PID: %(process)d | %(levelname)s: %(message)s"

# Apply logging configuration
logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)

# Create logger instance
logger = logging.getLogger("wave_stability")


def set_verbosity(verbose: bool = False, quiet: bool = False) -> None:
    """Adjust the package logger level from CLI flags."""
    if verbose:
        logger.setLevel(logging.DEBUG)
    elif quiet:
        logger.setLevel(logging.WARNING)
    else:
        logger.setLevel(logging.INFO)
