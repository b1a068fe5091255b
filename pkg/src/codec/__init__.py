"""
The CCS codec: presets, model sets, the bitstream container and the
encode/decode pipeline.
"""

from .bitstream import Bitstream, parse, serialize
from .coding import CodedComponent, ComponentCoder, hyper_latent_size
from .config import LAMBDAS, PRESETS, ModelConfig, get_preset, lambda_index
from .models import CCSModelSet, ComponentModel, component_specs, config_component_specs
from .pipeline import BLOCK, CCSCodec, DecodeResult, EncodeResult, LatentBundle, crop_image, pad_to_block

__all__ = [
    "BLOCK",
    "LAMBDAS",
    "PRESETS",
    "Bitstream",
    "CCSCodec",
    "CCSModelSet",
    "CodedComponent",
    "ComponentCoder",
    "ComponentModel",
    "DecodeResult",
    "EncodeResult",
    "LatentBundle",
    "ModelConfig",
    "component_specs",
    "config_component_specs",
    "crop_image",
    "get_preset",
    "hyper_latent_size",
    "lambda_index",
    "pad_to_block",
    "parse",
    "serialize",
]
