"""
Model configurations and named presets.

Preset names follow ``ccs-y<N_Y>-uv<N_UV>`` (conditional) and
``nc-y<N_Y>-uv<N_UV>`` (no conditioning); ``baseline-192`` is the
single-network RGB reference used only by the complexity analyzer.
"""

import re
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional

from ..utils.errors import ConfigError

LAMBDAS = (0.002, 0.007, 0.015, 0.05)

PRESETS = (
    "ccs-y128-uv64",
    "ccs-y128-uv128",
    "ccs-y64-uv128",
    "nc-y128-uv64",
    "baseline-192",
)

_PRESET = re.compile(r"^(ccs|nc)-y(\d+)-uv(\d+)$")
TABLE_MODES = ("exact", "scale_table")


@dataclass(frozen=True)
class ModelConfig:
    """Channel widths and conditioning of one codec variant."""
    name: str
    n_y: int
    n_uv: int
    conditional: bool = True
    lambda_id: int = 0
    mixtures: int = 1
    prior_support: int = 64
    table_mode: str = "exact"
    rgb_baseline: bool = False

    def __post_init__(self):
        if self.n_y <= 0 or (self.n_uv <= 0 and not self.rgb_baseline):
            raise ConfigError(f"{self.name}: channel widths must be positive")
        if self.n_y > 0xFFFF or self.n_uv > 0xFFFF:
            raise ConfigError(f"{self.name}: channel widths must fit in 16 bits")
        if not 0 <= self.lambda_id < len(LAMBDAS):
            raise ConfigError(f"lambda_id must be in [0, {len(LAMBDAS)}), got {self.lambda_id}")
        if self.mixtures not in (1, 2, 3):
            raise ConfigError(f"mixtures must be 1, 2 or 3, got {self.mixtures}")
        if self.table_mode not in TABLE_MODES:
            raise ConfigError(f"table_mode must be one of {TABLE_MODES}, got {self.table_mode!r}")
        if self.table_mode == "scale_table" and self.mixtures != 1:
            raise ConfigError("scale_table coding supports a single mixture component only")

    @property
    def lam(self) -> float:
        return LAMBDAS[self.lambda_id]

    @property
    def m_y(self) -> int:
        return self.n_y

    @property
    def m_uv(self) -> int:
        """Decoder-UV input channels: latent Y is concatenated when conditional."""
        return self.n_y + self.n_uv if self.conditional else self.n_uv

    @property
    def uv_in_channels(self) -> int:
        return 3 if self.conditional else 2

    def with_options(self, **changes) -> "ModelConfig":
        return replace(self, **changes)


def get_preset(name: str, lambda_id: int = 0, options: Optional[Dict[str, Any]] = None) -> ModelConfig:
    """
    Resolve a preset name.

    Args:
        name: Preset name, case-insensitive
        lambda_id: Index into LAMBDAS
        options: Codec options (``mixtures``, ``prior_support``, ``table_mode``)

    Returns:
        ModelConfig
    """
    options = options or {}
    extra = {k: options[k] for k in ("mixtures", "prior_support", "table_mode") if k in options}
    key = name.strip().lower()

    if key == "baseline-192":
        return ModelConfig(name=key, n_y=192, n_uv=0, conditional=False, lambda_id=lambda_id,
                           rgb_baseline=True, **extra)

    match = _PRESET.match(key)
    if match is None:
        raise ConfigError(f"unknown preset {name!r}; expected one of {PRESETS} or ccs|nc-y<N>-uv<N>")
    kind, n_y, n_uv = match.group(1), int(match.group(2)), int(match.group(3))
    return ModelConfig(name=key, n_y=n_y, n_uv=n_uv, conditional=(kind == "ccs"), lambda_id=lambda_id, **extra)


def lambda_index(value: float) -> int:
    for i, lam in enumerate(LAMBDAS):
        if abs(lam - value) < 1e-12:
            return i
    raise ConfigError(f"lambda {value} is not one of {LAMBDAS}")
