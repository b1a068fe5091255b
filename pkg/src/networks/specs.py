"""
Layer and network descriptions of the CCS sub-networks.

A :class:`NetworkSpec` is the ordered layer list of one sub-network (encoder,
decoder, hyper encoder, hyper decoder, context model, gather network) at a
given channel width. :func:`layer_kernels` expands every layer into the
convolutions it owns; parameter initialisation, the forward pass and the
complexity analyzer all walk that same expansion.
"""

import enum
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

from ..utils.errors import ConfigError, ShapeError


class Role(enum.Enum):
    ENCODER = "encoder"
    DECODER = "decoder"
    HYPER_ENC = "hyper_enc"
    HYPER_DEC = "hyper_dec"
    CONTEXT = "context"
    GATHER = "gather"

    @classmethod
    def parse(cls, value) -> "Role":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(f"invalid network role: {value!r}") from None


class LayerKind(enum.Enum):
    CONV = "Conv"
    SUBPEL_CONV = "SubpelConv"
    MASKED_CONV = "MaskedConv"
    LEAKY_RELU = "LeakyReLU"
    RB = "RB"
    RBU = "RBU"
    AB = "AB"


@dataclass(frozen=True)
class LayerSpec:
    """One row of a sub-network column."""
    kind: LayerKind
    in_channels: int
    out_channels: int
    kernel: int = 3
    stride: int = 1

    def __post_init__(self):
        if self.in_channels <= 0 or self.out_channels <= 0:
            raise ShapeError(f"{self.kind.value}: channel counts must be positive")
        if self.stride not in (1, 2):
            raise ShapeError(f"{self.kind.value}: stride must be 1 or 2")
        if self.kind is LayerKind.MASKED_CONV and self.kernel != 5:
            raise ShapeError("MaskedConv kernel must be 5")
        if self.kind in (LayerKind.SUBPEL_CONV, LayerKind.RBU) and self.stride != 2:
            raise ShapeError(f"{self.kind.value} upsamples by 2 and must have stride 2")
        if self.kind in (LayerKind.AB, LayerKind.LEAKY_RELU) and self.in_channels != self.out_channels:
            raise ShapeError(f"{self.kind.value} preserves the channel count")

    @property
    def label(self) -> str:
        if self.kind is LayerKind.LEAKY_RELU:
            return "Leaky ReLU"
        if self.kind in (LayerKind.CONV, LayerKind.SUBPEL_CONV, LayerKind.MASKED_CONV):
            return f"{self.kind.value}: {self.kernel}x{self.kernel} c{self.out_channels} s{self.stride}"
        return f"{self.kind.value} c{self.out_channels} s{self.stride}"


@dataclass(frozen=True)
class KernelSlot:
    """
    One convolution owned by a layer.

    ``grid`` says whether the convolution runs on the layer's input grid
    ("in") or its output grid ("out"); ``upscale`` is the pixel-shuffle
    factor applied to the convolution output (1 for plain convolutions).
    """
    name: str
    out_channels: int
    in_channels: int
    kernel: int
    stride: int = 1
    grid: str = "in"
    masked: bool = False
    upscale: int = 1

    @property
    def num_params(self) -> int:
        return self.out_channels * self.in_channels * self.kernel * self.kernel + self.out_channels

    @property
    def taps(self) -> int:
        """Kernel taps that contribute to the output (a type-A mask hides half the window plus the centre)."""
        full = self.kernel * self.kernel
        return full // 2 if self.masked else full


@dataclass
class NetworkSpec:
    """Ordered layer description of one sub-network."""
    role: Role
    n: int
    m: int
    layers: List[LayerSpec]
    mixtures: int = 1

    @property
    def in_channels(self) -> int:
        return self.layers[0].in_channels

    @property
    def out_channels(self) -> int:
        return self.layers[-1].out_channels

    @property
    def num_params(self) -> int:
        return sum(slot.num_params for layer in self.layers for slot in layer_kernels(layer))

    def output_size(self, height: int, width: int) -> Tuple[int, int]:
        for layer in self.layers:
            height, width = layer_output_size(layer, height, width)
        return height, width


def scaled_channels(n: int, numerator: int, denominator: int) -> int:
    """Channel count ``numerator/denominator * n`` rounded half-up to an integer."""
    value = int(math.floor(n * numerator / denominator + 0.5))
    if value <= 0:
        raise ShapeError(f"channel path {numerator}/{denominator}*{n} rounds to {value}")
    return value


def build_network(
    role,
    n: int,
    m: Optional[int] = None,
    out_channels: int = 1,
    in_channels: int = 1,
    mixtures: int = 1,
) -> NetworkSpec:
    """
    Build the layer list of one sub-network.

    Args:
        role: Sub-network role
        n: Channel width N
        m: Decoder input channels (decoder only; defaults to N)
        out_channels: Decoder output channels (1 for Y, 2 for UV, 3 for RGB)
        in_channels: Encoder input channels (1 for Y, 3 or 2 for UV, 3 for RGB)
        mixtures: Gaussian mixture components K emitted by the gather network

    Returns:
        NetworkSpec
    """
    role = Role.parse(role)
    if n <= 0:
        raise ShapeError(f"N must be positive, got {n}")
    if mixtures not in (1, 2, 3):
        raise ConfigError(f"mixtures must be 1, 2 or 3, got {mixtures}")
    m = n if m is None else m

    builder = {
        Role.ENCODER: lambda: _encoder(n, in_channels),
        Role.DECODER: lambda: _decoder(n, m, out_channels),
        Role.HYPER_ENC: lambda: _hyper_encoder(n),
        Role.HYPER_DEC: lambda: _hyper_decoder(n),
        Role.CONTEXT: lambda: [LayerSpec(LayerKind.MASKED_CONV, n, 2 * n, kernel=5)],
        Role.GATHER: lambda: _gather(n, mixtures),
    }[role]

    return NetworkSpec(role=role, n=n, m=m, layers=builder(), mixtures=mixtures)


def _encoder(n: int, in_channels: int) -> List[LayerSpec]:
    return [
        LayerSpec(LayerKind.RB, in_channels, n, stride=2),
        LayerSpec(LayerKind.RB, n, n, stride=1),
        LayerSpec(LayerKind.RB, n, n, stride=2),
        LayerSpec(LayerKind.AB, n, n),
        LayerSpec(LayerKind.RB, n, n, stride=1),
        LayerSpec(LayerKind.RB, n, n, stride=2),
        LayerSpec(LayerKind.RB, n, n, stride=1),
        LayerSpec(LayerKind.CONV, n, n, kernel=3, stride=2),
        LayerSpec(LayerKind.AB, n, n),
    ]


def _decoder(n: int, m: int, out_channels: int) -> List[LayerSpec]:
    return [
        LayerSpec(LayerKind.AB, m, m),
        LayerSpec(LayerKind.RB, m, n, stride=1),
        LayerSpec(LayerKind.RBU, n, n, stride=2),
        LayerSpec(LayerKind.RB, n, n, stride=1),
        LayerSpec(LayerKind.RBU, n, n, stride=2),
        LayerSpec(LayerKind.AB, n, n),
        LayerSpec(LayerKind.RB, n, n, stride=1),
        LayerSpec(LayerKind.RBU, n, n, stride=2),
        LayerSpec(LayerKind.RB, n, n, stride=1),
        LayerSpec(LayerKind.SUBPEL_CONV, n, out_channels, kernel=3, stride=2),
    ]


def _hyper_encoder(n: int) -> List[LayerSpec]:
    return [
        LayerSpec(LayerKind.CONV, n, n, kernel=3, stride=1),
        LayerSpec(LayerKind.LEAKY_RELU, n, n),
        LayerSpec(LayerKind.CONV, n, n, kernel=3, stride=1),
        LayerSpec(LayerKind.LEAKY_RELU, n, n),
        LayerSpec(LayerKind.CONV, n, n, kernel=3, stride=2),
        LayerSpec(LayerKind.LEAKY_RELU, n, n),
        LayerSpec(LayerKind.CONV, n, n, kernel=3, stride=1),
        LayerSpec(LayerKind.LEAKY_RELU, n, n),
        LayerSpec(LayerKind.CONV, n, n, kernel=3, stride=2),
    ]


def _hyper_decoder(n: int) -> List[LayerSpec]:
    wide = scaled_channels(n, 3, 2)
    return [
        LayerSpec(LayerKind.CONV, n, n, kernel=3, stride=1),
        LayerSpec(LayerKind.LEAKY_RELU, n, n),
        LayerSpec(LayerKind.SUBPEL_CONV, n, n, kernel=3, stride=2),
        LayerSpec(LayerKind.LEAKY_RELU, n, n),
        LayerSpec(LayerKind.CONV, n, wide, kernel=3, stride=1),
        LayerSpec(LayerKind.LEAKY_RELU, wide, wide),
        LayerSpec(LayerKind.SUBPEL_CONV, wide, wide, kernel=3, stride=2),
        LayerSpec(LayerKind.LEAKY_RELU, wide, wide),
        LayerSpec(LayerKind.CONV, wide, 2 * n, kernel=3, stride=1),
    ]


def _gather(n: int, mixtures: int) -> List[LayerSpec]:
    first = scaled_channels(n, 11, 3)
    second = scaled_channels(n, 10, 3)
    return [
        LayerSpec(LayerKind.CONV, 4 * n, first, kernel=1),
        LayerSpec(LayerKind.LEAKY_RELU, first, first),
        LayerSpec(LayerKind.CONV, first, second, kernel=1),
        LayerSpec(LayerKind.LEAKY_RELU, second, second),
        LayerSpec(LayerKind.CONV, second, 3 * mixtures * n, kernel=1),
    ]


def layer_kernels(layer: LayerSpec) -> List[KernelSlot]:
    """Expand a layer into the convolutions it owns, in parameter order."""
    cin, cout, kind = layer.in_channels, layer.out_channels, layer.kind

    if kind is LayerKind.LEAKY_RELU:
        return []
    if kind is LayerKind.CONV:
        return [KernelSlot("conv", cout, cin, layer.kernel, stride=layer.stride)]
    if kind is LayerKind.MASKED_CONV:
        return [KernelSlot("conv", cout, cin, layer.kernel, masked=True)]
    if kind is LayerKind.SUBPEL_CONV:
        return [KernelSlot("conv", cout * 4, cin, layer.kernel, upscale=2)]
    if kind is LayerKind.RB:
        slots = [
            KernelSlot("conv1", cout, cin, 3, stride=layer.stride),
            KernelSlot("conv2", cout, cout, 3, grid="out"),
        ]
        if layer.stride == 2 or cin != cout:
            slots.append(KernelSlot("skip", cout, cin, 1, stride=layer.stride))
        return slots
    if kind is LayerKind.RBU:
        return [
            KernelSlot("subpel", cout * 4, cin, 3, upscale=2),
            KernelSlot("conv", cout, cout, 3, grid="out"),
            KernelSlot("skip", cout * 4, cin, 3, upscale=2),
        ]
    if kind is LayerKind.AB:
        return _attention_kernels(cin)
    raise ConfigError(f"unknown layer kind {kind}")


def _attention_kernels(c: int) -> List[KernelSlot]:
    half = max(1, c // 2)
    slots = []
    for branch in ("trunk", "mask"):
        for unit in range(3):
            prefix = f"{branch}.{unit}"
            slots += [
                KernelSlot(f"{prefix}.reduce", half, c, 1),
                KernelSlot(f"{prefix}.conv", half, half, 3),
                KernelSlot(f"{prefix}.expand", c, half, 1),
            ]
    slots.append(KernelSlot("mask.out", c, c, 1))
    return slots


def layer_output_size(layer: LayerSpec, height: int, width: int) -> Tuple[int, int]:
    if layer.kind in (LayerKind.SUBPEL_CONV, LayerKind.RBU):
        return height * 2, width * 2
    if layer.kind in (LayerKind.CONV, LayerKind.RB):
        return math.ceil(height / layer.stride), math.ceil(width / layer.stride)
    return height, width
