"""Complexity accounting for CCS configurations."""

from .complexity import (
    BYTES_PER_PARAM,
    CHECKPOINT_BYTES_PER_PARAM,
    LayerCost,
    MacReport,
    compare_presets,
    count_macs,
    count_params,
    network_costs,
)

__all__ = [
    "BYTES_PER_PARAM",
    "CHECKPOINT_BYTES_PER_PARAM",
    "LayerCost",
    "MacReport",
    "compare_presets",
    "count_macs",
    "count_params",
    "network_costs",
]
