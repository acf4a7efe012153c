import logging
import os
import sys
from typing import Optional

LOG_LEVELS = {
    'debug': logging.DEBUG,
    'info': logging.INFO,
    'warning': logging.WARNING,
    'error': logging.ERROR,
    'critical': logging.CRITICAL
}


def configure_logging(level: int = logging.INFO, log_dir: Optional[str] = None) -> None:
    """Configure logging for the application."""
    # Set up root logger
    logger = logging.getLogger('tlsynth')
    logger.setLevel(level)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    # Console output stays off stdout, which carries command results
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if not log_dir:
        return

    # Add file handler for errors
    os.makedirs(log_dir, exist_ok=True)
    error_handler = logging.FileHandler(os.path.join(log_dir, 'tlsynth_errors.log'))
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(formatter)
    logger.addHandler(error_handler)

    # Create debug log file if level is DEBUG
    if level == logging.DEBUG:
        debug_handler = logging.FileHandler(os.path.join(log_dir, 'tlsynth_debug.log'))
        debug_handler.setLevel(logging.DEBUG)
        debug_handler.setFormatter(formatter)
        logger.addHandler(debug_handler)
