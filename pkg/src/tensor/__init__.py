"""
Tensor core for the CCS codec.

Channel-last 64-bit tensors and exactly the operations the codec networks use.
"""

from .ops import (
    DTYPE,
    LEAKY_SLOPE,
    ActivationPattern,
    ConvKernel,
    ElementwiseOp,
    MaskType,
    add,
    avg_downsample2,
    causal_mask,
    concat_channels,
    conv2d,
    crop,
    elementwise,
    empty_channels,
    frozen_activations,
    leaky_relu,
    mul,
    pixel_shuffle,
    pixel_unshuffle,
    sigmoid,
    softplus,
    spatial_shape,
    tensor,
)

__all__ = [
    "DTYPE",
    "LEAKY_SLOPE",
    "ActivationPattern",
    "ConvKernel",
    "ElementwiseOp",
    "MaskType",
    "add",
    "avg_downsample2",
    "causal_mask",
    "concat_channels",
    "conv2d",
    "crop",
    "elementwise",
    "empty_channels",
    "frozen_activations",
    "leaky_relu",
    "mul",
    "pixel_shuffle",
    "pixel_unshuffle",
    "sigmoid",
    "softplus",
    "spatial_shape",
    "tensor",
]
