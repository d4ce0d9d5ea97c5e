import logging
import os
from datetime import datetime

from rich.logging import RichHandler


def setup_logging(log_dir="logs", log_level=logging.INFO, console=True):
    """
    Sets up logging for solver runs.

    Args:
        log_dir (str): Directory where logs will be saved.
        log_level (int | str): Logging level (default: INFO).
        console (bool): Also log to the terminal through rich.

    Returns:
        logging.Logger: Configured "recyklos" logger.
    """
    if isinstance(log_level, str):
        log_level = logging.getLevelName(log_level.upper())

    os.makedirs(log_dir, exist_ok=True)

    log_filename = f"recyklos_{datetime.now().strftime('%Y-%m-%d_%H-%M-%S')}.log"
    log_filepath = os.path.join(log_dir, log_filename)

    file_handler = logging.FileHandler(log_filepath)
    file_handler.setFormatter(logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s"))
    handlers = [file_handler]
    if console:
        handlers.append(RichHandler(rich_tracebacks=True, show_path=False))

    logging.basicConfig(level=log_level, format="%(message)s", handlers=handlers, force=True)

    logger = logging.getLogger("recyklos")
    logger.info("Logging initialized. Logs are stored in: %s", log_filepath)
    return logger
