"""
Configuration loading for the CCS codec.

Configuration files are plain YAML mappings under ``configs/``; classes
receive the resulting dictionaries and read them with ``config.get``.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from .errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_ROOT = Path(__file__).resolve().parent.parent.parent / "configs"


def load_config(config_path: Union[str, Path]) -> Dict[str, Any]:
    """
    Load configuration from a YAML file.

    Args:
        config_path: Path to the YAML file

    Returns:
        Configuration dictionary (empty for an empty file)
    """
    with open(config_path, "r") as f:
        data = yaml.safe_load(f)

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{config_path}: expected a mapping at top level, got {type(data).__name__}")

    logger.debug(f"Loaded configuration from {config_path}")
    return data


def load_default_config(name: str) -> Dict[str, Any]:
    """Load one of the bundled configurations, e.g. ``"codec/default"``."""
    path = CONFIG_ROOT / f"{name}.yaml"
    if not path.exists():
        logger.debug(f"No bundled configuration {path}, using built-in defaults")
        return {}
    return load_config(path)


def merge_config(base: Dict[str, Any], override: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """Shallow-merge ``override`` onto ``base``; ``None`` values in override are skipped."""
    merged = dict(base)
    for key, value in (override or {}).items():
        if value is not None:
            merged[key] = value
    return merged
