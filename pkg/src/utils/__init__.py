"""
Utilities for the CCS codec.

This module provides utility functions and classes:
- errors: Exception hierarchy
- config: YAML configuration loading
- logging_utils: Logging configuration and experiment tracking
- metrics: PSNR, rate-distortion curves and BD-rate
"""

from .config import load_config, load_default_config, merge_config
from .errors import (
    CCSError,
    ConfigError,
    EntropyCodingError,
    FormatError,
    InvariantViolation,
    ShapeError,
    TrainingDivergedError,
)
from .logging_utils import ExperimentLogger, setup_logging
from .metrics import RDCurve, RDPoint, bd_rate, fit_residuals, psnr_rgb, read_rd_csv, write_rd_csv

__all__ = [
    # Errors
    "CCSError",
    "ConfigError",
    "EntropyCodingError",
    "FormatError",
    "InvariantViolation",
    "ShapeError",
    "TrainingDivergedError",

    # Configuration
    "load_config",
    "load_default_config",
    "merge_config",

    # Logging utilities
    "setup_logging",
    "ExperimentLogger",

    # Metrics
    "RDCurve",
    "RDPoint",
    "bd_rate",
    "fit_residuals",
    "psnr_rgb",
    "read_rd_csv",
    "write_rd_csv",
]
