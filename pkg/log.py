""" Docstring for the log.py file.

"""
import logging
import logging.config
import os
from datetime import datetime
from typing import Optional

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config")
LOG_DIR = "./logs"
STAGE = os.getenv('STAGE', 'dev')


def setup_logging(stage: Optional[str] = None, log_dir: str = LOG_DIR) -> None:
    """
    Load logging configuration. Unknown stages fall back to the dev configuration.

    :param stage: "dev" or "prod"; defaults to the STAGE environment variable.
    :param log_dir: Directory of the log file, created if missing.
    """
    log_configs = {"dev": "logging.dev.ini", "prod": "logging.prod.ini"}
    config = log_configs.get(stage or STAGE, "logging.dev.ini")
    config_path = os.path.join(CONFIG_DIR, config)

    os.makedirs(log_dir, exist_ok=True)
    timestamp = datetime.now().strftime("%Y%m%d-%H%M%S")

    logging.config.fileConfig(
        config_path,
        disable_existing_loggers=False,
        defaults={"logfilename": os.path.join(log_dir, f"{timestamp}.log")},
    )
