"""
Forward evaluation of the CCS sub-networks.

Residual and attention blocks expand into fixed internal graphs:

- RB s1: conv3x3 -> leaky ReLU -> conv3x3, plus the input (1x1 conv on the
  skip when the channel count changes).
- RB s2: the same with a stride-2 first conv and a stride-2 1x1 skip conv.
- RBU: sub-pixel conv x2 -> leaky ReLU -> conv3x3, skip through a second
  sub-pixel conv x2.
- AB: trunk of three bottleneck residual units; mask branch of three units,
  a 1x1 conv and a sigmoid; output = x + trunk * mask.
"""

from typing import Dict

import torch

from .. import tensor as T
from ..tensor import ConvKernel, MaskType
from ..utils.errors import ShapeError
from .params import ParamStore
from .specs import LayerKind, LayerSpec, NetworkSpec


def forward(spec: NetworkSpec, params: ParamStore, x: torch.Tensor) -> torch.Tensor:
    """
    Apply a sub-network to ``x``.

    Args:
        spec: Network description
        params: Weights created for ``spec``
        x: Input tensor (H, W, C) or (B, H, W, C)

    Returns:
        Network output
    """
    if x.shape[-1] != spec.in_channels:
        raise ShapeError(
            f"{spec.role.value}: input has {x.shape[-1]} channels, network expects {spec.in_channels}"
        )
    for index, layer in enumerate(spec.layers):
        x = apply_layer(layer, params.kernels.get(index, {}), x)
    return x


def apply_layer(layer: LayerSpec, kernels: Dict[str, ConvKernel], x: torch.Tensor) -> torch.Tensor:
    kind = layer.kind
    if kind is LayerKind.LEAKY_RELU:
        return T.leaky_relu(x)
    if kind is LayerKind.CONV:
        return T.conv2d(x, kernels["conv"], stride=layer.stride)
    if kind is LayerKind.MASKED_CONV:
        return T.conv2d(x, kernels["conv"], mask=MaskType.A)
    if kind is LayerKind.SUBPEL_CONV:
        return subpel_conv(x, kernels["conv"])
    if kind is LayerKind.RB:
        return residual_block(x, kernels, layer.stride)
    if kind is LayerKind.RBU:
        return residual_block_upsample(x, kernels)
    if kind is LayerKind.AB:
        return attention_block(x, kernels)
    raise ShapeError(f"unsupported layer kind {kind}")


def subpel_conv(x: torch.Tensor, kernel: ConvKernel) -> torch.Tensor:
    return T.pixel_shuffle(T.conv2d(x, kernel), 2)


def residual_block(x: torch.Tensor, kernels: Dict[str, ConvKernel], stride: int) -> torch.Tensor:
    out = T.leaky_relu(T.conv2d(x, kernels["conv1"], stride=stride))
    out = T.conv2d(out, kernels["conv2"])
    identity = T.conv2d(x, kernels["skip"], stride=stride) if "skip" in kernels else x
    return T.add(out, identity)


def residual_block_upsample(x: torch.Tensor, kernels: Dict[str, ConvKernel]) -> torch.Tensor:
    out = T.leaky_relu(subpel_conv(x, kernels["subpel"]))
    out = T.conv2d(out, kernels["conv"])
    return T.add(out, subpel_conv(x, kernels["skip"]))


def _bottleneck_unit(x: torch.Tensor, kernels: Dict[str, ConvKernel], prefix: str) -> torch.Tensor:
    out = T.leaky_relu(T.conv2d(x, kernels[f"{prefix}.reduce"]))
    out = T.leaky_relu(T.conv2d(out, kernels[f"{prefix}.conv"]))
    out = T.conv2d(out, kernels[f"{prefix}.expand"])
    return T.leaky_relu(T.add(out, x))


def attention_block(x: torch.Tensor, kernels: Dict[str, ConvKernel]) -> torch.Tensor:
    trunk = x
    mask = x
    for unit in range(3):
        trunk = _bottleneck_unit(trunk, kernels, f"trunk.{unit}")
        mask = _bottleneck_unit(mask, kernels, f"mask.{unit}")
    mask = T.sigmoid(T.conv2d(mask, kernels["mask.out"]))
    return T.add(x, T.mul(trunk, mask))
