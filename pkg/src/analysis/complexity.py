"""
Static multiply-accumulate and parameter accounting.

Every convolution slot of every sub-network is charged
``output positions x out_channels x in_channels x taps`` MACs. Masked
convolutions count only their visible taps; activations, pooling, bias adds
and the attention gating are free.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

import pandas as pd

from ..codec.config import ModelConfig, get_preset
from ..codec.models import config_component_specs
from ..networks import NetworkSpec, Role, layer_kernels, layer_output_size
from ..utils.errors import ConfigError, ShapeError

logger = logging.getLogger(__name__)

BYTES_PER_PARAM = 4
# Weights plus two optimizer moments.
CHECKPOINT_BYTES_PER_PARAM = 3 * BYTES_PER_PARAM


@dataclass
class LayerCost:
    component: str
    role: str
    index: int
    layer: str
    macs: int
    params: int


@dataclass
class MacReport:
    """Per-layer costs of a configuration at one input size."""
    config: str
    height: int
    width: int
    layers: List[LayerCost] = field(default_factory=list)

    @property
    def total_macs(self) -> int:
        return sum(entry.macs for entry in self.layers)

    @property
    def params(self) -> int:
        return sum(entry.params for entry in self.layers)

    @property
    def param_bytes(self) -> int:
        return self.params * BYTES_PER_PARAM

    @property
    def checkpoint_bytes(self) -> int:
        return self.params * CHECKPOINT_BYTES_PER_PARAM

    @property
    def kmac_per_pixel(self) -> float:
        return self.total_macs / (self.height * self.width * 1000.0)

    def by_component(self) -> Dict[str, int]:
        totals: Dict[str, int] = {}
        for entry in self.layers:
            totals[entry.component] = totals.get(entry.component, 0) + entry.macs
        return totals

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {"layer": f"{e.index}:{e.layer}", "role": e.role, "component": e.component,
                 "macs": e.macs, "params": e.params}
                for e in self.layers
            ],
            columns=["layer", "role", "component", "macs", "params"],
        )

    def to_csv(self, path: Union[str, Path, None] = None) -> str:
        text = self.to_frame().to_csv(index=False)
        if path is not None:
            Path(path).write_text(text)
        return text

    def summary(self) -> str:
        lines = [f"{self.config} @ {self.width}x{self.height}"]
        for component, macs in self.by_component().items():
            lines.append(f"  {component:<4} {macs / (self.height * self.width * 1000.0):10.1f} KMAC/px")
        lines.append(f"  total {self.kmac_per_pixel:9.1f} KMAC/px")
        lines.append(f"  params {self.params} ({self.param_bytes / 2 ** 20:.1f} MiB, "
                     f"checkpoint {self.checkpoint_bytes / 2 ** 20:.1f} MiB)")
        return "\n".join(lines)


def network_costs(spec: NetworkSpec, height: int, width: int) -> List[Tuple[int, str, int, int]]:
    """(index, label, macs, params) of every layer for an input grid of height x width."""
    costs = []
    for index, layer in enumerate(spec.layers):
        out_h, out_w = layer_output_size(layer, height, width)
        macs = 0
        params = 0
        for slot in layer_kernels(layer):
            if slot.grid == "out":
                positions = out_h * out_w
            else:
                positions = math.ceil(height / slot.stride) * math.ceil(width / slot.stride)
            macs += positions * slot.out_channels * slot.in_channels * slot.taps
            params += slot.num_params
        costs.append((index, layer.label, macs, params))
        height, width = out_h, out_w
    return costs


def _resolve(config: Union[str, ModelConfig]) -> ModelConfig:
    if isinstance(config, ModelConfig):
        return config
    try:
        return get_preset(config)
    except ConfigError:
        raise ConfigError(f"unknown config {config!r}") from None


def _component_grids(config: ModelConfig, height: int, width: int) -> Dict[str, Dict[Role, Tuple[int, int]]]:
    def grids(image_h, image_w):
        lat_h, lat_w = image_h // 16, image_w // 16
        return {
            Role.ENCODER: (image_h, image_w),
            Role.HYPER_ENC: (lat_h, lat_w),
            Role.HYPER_DEC: (math.ceil(lat_h / 4), math.ceil(lat_w / 4)),
            Role.CONTEXT: (lat_h, lat_w),
            Role.GATHER: (lat_h, lat_w),
            Role.DECODER: (lat_h, lat_w),
        }

    if config.rgb_baseline:
        return {"rgb": grids(height, width)}
    return {"y": grids(height, width), "uv": grids(height // 2, width // 2)}


def count_macs(config: Union[str, ModelConfig], height: int, width: int) -> MacReport:
    """
    Charge every convolution of every sub-network of every component.

    Args:
        config: Preset name or ModelConfig (baseline-192 included)
        height: Input height, a multiple of 128
        width: Input width, a multiple of 128

    Returns:
        MacReport
    """
    if height <= 0 or width <= 0 or height % 128 or width % 128:
        raise ShapeError(f"analysis size must be a positive multiple of 128, got {width}x{height}")
    config = _resolve(config)
    report = MacReport(config=config.name, height=height, width=width)
    specs = config_component_specs(config)

    for component, grids in _component_grids(config, height, width).items():
        for role, (h, w) in grids.items():
            for index, label, macs, params in network_costs(specs[component][role], h, w):
                report.layers.append(LayerCost(component, role.value, index, label, macs, params))

    logger.debug(f"{config.name}: {report.kmac_per_pixel:.1f} KMAC/px, {report.params} params")
    return report


def count_params(config: Union[str, ModelConfig]) -> Tuple[int, int]:
    """Parameter count and bytes (4 per parameter) over every sub-network of every component."""
    config = _resolve(config)
    params = sum(spec.num_params for specs in config_component_specs(config).values() for spec in specs.values())
    return params, params * BYTES_PER_PARAM


def compare_presets(names, height: int = 512, width: int = 768, reference: str = "baseline-192") -> pd.DataFrame:
    """KMAC/px and model size of several presets relative to ``reference``."""
    ref = count_macs(reference, height, width)
    rows = []
    for name in names:
        report = count_macs(name, height, width)
        rows.append({
            "config": report.config,
            "kmac_per_px": report.kmac_per_pixel,
            "params": report.params,
            "param_mib": report.param_bytes / 2 ** 20,
            "mac_ratio": report.total_macs / ref.total_macs,
            "param_ratio": report.params / ref.params,
        })
    return pd.DataFrame(rows)
