"""
Logging utilities for the CCS codec.

Provides unified logging configuration and experiment tracking.
"""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional, TextIO

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(
    log_level: str = "INFO",
    log_file: Optional[str] = None,
    log_format: Optional[str] = None,
    stream: Optional[TextIO] = None,
) -> logging.Logger:
    """
    Setup global logging configuration.

    Diagnostics go to the error stream so that results written to standard
    output stay machine-readable.

    Args:
        log_level: Logging level
        log_file: Log file path
        log_format: Log format string
        stream: Console stream (defaults to ``sys.stderr``)

    Returns:
        Configured logger
    """
    level = getattr(logging, log_level.upper())
    formatter = logging.Formatter(log_format or LOG_FORMAT)

    logger = logging.getLogger()
    logger.setLevel(level)
    logger.handlers.clear()

    console_handler = logging.StreamHandler(stream or sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


class ExperimentLogger:
    """
    Per-experiment log file with configuration, per-step and result records.

    Records go to ``<log_dir>/<name>_<timestamp>.log`` and do not propagate to
    the root logger; warnings are echoed to the error stream.
    """

    def __init__(self, experiment_name: str, log_dir: str = "experiments/logs", log_level: str = "INFO"):
        self.experiment_name = experiment_name
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        self.log_file = self.log_dir / f"{experiment_name}_{timestamp}.log"

        self.logger = logging.getLogger(f"experiment_{experiment_name}")
        self.logger.setLevel(getattr(logging, log_level.upper()))
        self.logger.handlers.clear()
        self.logger.propagate = False

        formatter = logging.Formatter(LOG_FORMAT)
        file_handler = logging.FileHandler(self.log_file)
        file_handler.setFormatter(formatter)
        self.logger.addHandler(file_handler)
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(logging.WARNING)
        console_handler.setFormatter(formatter)
        self.logger.addHandler(console_handler)

        self.logger.info(f"Started experiment logging: {experiment_name}")

    def _log_block(self, title: str, values: dict):
        self.logger.info(f"=== {title} ===")
        for key, value in values.items():
            self.logger.info(f"{key}: {value}")
        self.logger.info(f"=== End {title} ===")

    def log_config(self, config: dict):
        self._log_block("Experiment Configuration", config)

    def log_step(self, step: int, metrics: dict):
        metric_str = ", ".join(f"{k}={v:.6f}" if isinstance(v, float) else f"{k}={v}" for k, v in metrics.items())
        self.logger.info(f"Step {step}: {metric_str}")

    def log_results(self, results: dict):
        self._log_block("Experiment Results", results)

    def cleanup(self):
        """Close and detach the file and console handlers."""
        for handler in self.logger.handlers:
            handler.close()
        self.logger.handlers.clear()
