"""
Sub-network construction and evaluation: encoder, decoder, hyper encoder,
hyper decoder, context model and gather network.
"""

from .blocks import apply_layer, forward
from .params import (
    ParamStore,
    init_params,
    load_store,
    read_weights_file,
    save_store,
    write_weights_file,
    zero_params,
)
from .specs import (
    KernelSlot,
    LayerKind,
    LayerSpec,
    NetworkSpec,
    Role,
    build_network,
    layer_kernels,
    layer_output_size,
    scaled_channels,
)

__all__ = [
    "KernelSlot",
    "LayerKind",
    "LayerSpec",
    "NetworkSpec",
    "ParamStore",
    "Role",
    "apply_layer",
    "build_network",
    "forward",
    "init_params",
    "layer_kernels",
    "layer_output_size",
    "load_store",
    "read_weights_file",
    "save_store",
    "scaled_channels",
    "write_weights_file",
    "zero_params",
]
