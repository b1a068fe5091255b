"""
Tensor operations for the CCS networks.

Tensors are 64-bit ``torch.Tensor`` values laid out channel-last as
``(height, width, channels)``; a leading batch dimension ``(B, H, W, C)`` is
accepted everywhere so the same code serves coding and training. Every
operation is a pure function of its inputs and is differentiable through
torch autograd.
"""

import enum
import math
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import torch
import torch.nn.functional as F

from ..utils.errors import InvariantViolation, ShapeError

DTYPE = torch.float64
LEAKY_SLOPE = 0.01

# Ops verify their outputs are finite.
CHECK_FINITE = True


class MaskType(enum.Enum):
    """Convolution masks; type A hides the centre tap and all later taps."""
    A = "A"


class ElementwiseOp(enum.Enum):
    ADD = "add"
    MUL = "mul"


@dataclass
class ConvKernel:
    """Weights of one convolution: ``weight`` is (out, in, k_h, k_w)."""
    weight: torch.Tensor
    bias: torch.Tensor

    def __post_init__(self):
        if self.weight.dim() != 4:
            raise ShapeError(f"kernel weight must be 4-D, got shape {tuple(self.weight.shape)}")
        if any(d <= 0 for d in self.weight.shape):
            raise ShapeError(f"kernel dimensions must be positive, got {tuple(self.weight.shape)}")
        if self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(
                f"bias shape {tuple(self.bias.shape)} does not match {self.weight.shape[0]} output channels"
            )

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def k_h(self) -> int:
        return self.weight.shape[2]

    @property
    def k_w(self) -> int:
        return self.weight.shape[3]

    @property
    def num_params(self) -> int:
        return self.weight.numel() + self.bias.numel()

    @classmethod
    def zeros(cls, out_channels: int, in_channels: int, k_h: int, k_w: int) -> "ConvKernel":
        return cls(
            weight=torch.zeros(out_channels, in_channels, k_h, k_w, dtype=DTYPE),
            bias=torch.zeros(out_channels, dtype=DTYPE),
        )


class ActivationPattern:
    """
    Sign pattern of every leaky ReLU evaluated under :func:`frozen_activations`.

    The first pass records which inputs were positive; after :meth:`rewind`
    every pass reuses those pieces in call order. With the pattern fixed the
    network is smooth in its parameters, and its derivative at the recorded
    point equals the true one.
    """

    def __init__(self):
        self.masks: List[torch.Tensor] = []
        self.replaying = False
        self._cursor = 0

    def rewind(self):
        if self.masks:
            self.replaying = True
        self._cursor = 0

    def apply(self, x: torch.Tensor, slope: float) -> torch.Tensor:
        if not self.replaying:
            mask = x > 0
            self.masks.append(mask)
        else:
            if self._cursor >= len(self.masks) or self.masks[self._cursor].shape != x.shape:
                raise InvariantViolation("activation pattern does not match the evaluated graph")
            mask = self.masks[self._cursor]
            self._cursor += 1
        return torch.where(mask, x, slope * x)


_PATTERN: ContextVar[Optional[ActivationPattern]] = ContextVar("activation_pattern", default=None)


@contextmanager
def frozen_activations(pattern: Optional[ActivationPattern] = None) -> Iterator[ActivationPattern]:
    pattern = pattern or ActivationPattern()
    token = _PATTERN.set(pattern)
    try:
        yield pattern
    finally:
        _PATTERN.reset(token)


def tensor(data, channels: Optional[int] = None) -> torch.Tensor:
    """Build a 64-bit tensor; a 2-D input becomes a single-channel (H, W, 1) tensor."""
    out = torch.as_tensor(data, dtype=DTYPE)
    if out.dim() == 2:
        out = out.unsqueeze(-1)
    if channels is not None and out.shape[-1] != channels:
        raise ShapeError(f"expected {channels} channels, got {out.shape[-1]}")
    return out


def empty_channels(height: int, width: int, batch: Optional[int] = None) -> torch.Tensor:
    """A tensor with zero channels; concatenating it is a no-op."""
    shape = (height, width, 0) if batch is None else (batch, height, width, 0)
    return torch.zeros(shape, dtype=DTYPE)


def spatial_shape(x: torch.Tensor) -> Tuple[int, int]:
    _check_rank(x)
    return x.shape[-3], x.shape[-2]


def causal_mask(k_h: int, k_w: int) -> torch.Tensor:
    """Type-A raster mask: 1 for taps strictly before the centre, else 0."""
    mask = torch.ones(k_h, k_w, dtype=DTYPE)
    yc, xc = k_h // 2, k_w // 2
    mask[yc + 1:, :] = 0
    mask[yc, xc:] = 0
    return mask


def masked_weight(kernel: ConvKernel, mask: Optional[MaskType]) -> torch.Tensor:
    if mask is None:
        return kernel.weight
    return kernel.weight * causal_mask(kernel.k_h, kernel.k_w)


def conv2d(
    x: torch.Tensor,
    kernel: ConvKernel,
    stride: int = 1,
    mask: Optional[MaskType] = None,
) -> torch.Tensor:
    """
    Zero "same"-padded 2-D convolution.

    Args:
        x: Input tensor (H, W, C_in) or (B, H, W, C_in)
        kernel: Convolution weights
        stride: 1 or 2
        mask: Optional causal mask applied to the kernel before use

    Returns:
        Tensor of shape (ceil(H/stride), ceil(W/stride), C_out)
    """
    _check_rank(x)
    if x.shape[-1] != kernel.in_channels:
        raise ShapeError(f"conv2d: input has {x.shape[-1]} channels, kernel expects {kernel.in_channels}")
    if stride not in (1, 2):
        raise ShapeError(f"conv2d: stride must be 1 or 2, got {stride}")
    h, w = spatial_shape(x)
    if h <= 0 or w <= 0:
        raise ShapeError(f"conv2d: non-positive spatial size {h}x{w}")

    batched = x.dim() == 4
    nchw = (x if batched else x.unsqueeze(0)).permute(0, 3, 1, 2)

    pad_h = _same_padding(h, kernel.k_h, stride)
    pad_w = _same_padding(w, kernel.k_w, stride)
    nchw = F.pad(nchw, (pad_w // 2, pad_w - pad_w // 2, pad_h // 2, pad_h - pad_h // 2))

    out = F.conv2d(nchw, masked_weight(kernel, mask), kernel.bias, stride=stride)
    out = out.permute(0, 2, 3, 1)
    return _finite(out if batched else out.squeeze(0), "conv2d")


def pixel_shuffle(x: torch.Tensor, r: int) -> torch.Tensor:
    """Rearrange (H, W, C*r^2) into (r*H, r*W, C): out(r*i+di, r*j+dj, c) = x(i, j, c*r^2 + di*r + dj)."""
    _check_rank(x)
    if r <= 0 or x.shape[-1] % (r * r):
        raise ShapeError(f"pixel_shuffle: {x.shape[-1]} channels not divisible by {r}^2")
    return _channel_last(F.pixel_shuffle, x, r)


def pixel_unshuffle(x: torch.Tensor, r: int) -> torch.Tensor:
    """Inverse of :func:`pixel_shuffle`."""
    _check_rank(x)
    h, w = spatial_shape(x)
    if r <= 0 or h % r or w % r:
        raise ShapeError(f"pixel_unshuffle: {h}x{w} not divisible by {r}")
    return _channel_last(F.pixel_unshuffle, x, r)


def leaky_relu(x: torch.Tensor, slope: float = LEAKY_SLOPE) -> torch.Tensor:
    if not 0.0 < slope < 1.0:
        raise ShapeError(f"leaky_relu: slope must be in (0, 1), got {slope}")
    pattern = _PATTERN.get()
    if pattern is not None:
        return pattern.apply(x, slope)
    return F.leaky_relu(x, negative_slope=slope)


def concat_channels(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Channel-wise concatenation; ``a`` occupies the low channel indices."""
    _check_rank(a)
    _check_rank(b)
    if a.shape[:-1] != b.shape[:-1]:
        raise ShapeError(f"concat_channels: spatial mismatch {tuple(a.shape[:-1])} vs {tuple(b.shape[:-1])}")
    return torch.cat([a, b], dim=-1)


def avg_downsample2(x: torch.Tensor, ceil: bool = False) -> torch.Tensor:
    """
    Parameter-free 2x2 mean pooling per channel.

    With ``ceil`` an odd height or width is first extended by repeating its
    last row or column, giving ceil(H/2) x ceil(W/2).
    """
    h, w = spatial_shape(x)
    if (h % 2 or w % 2) and not ceil:
        raise ShapeError(f"avg_downsample2: dimensions must be even, got {h}x{w}")
    if h % 2 or w % 2:
        x = _channel_last(F.pad, x, (0, w % 2, 0, h % 2), "replicate")
    return _channel_last(F.avg_pool2d, x, 2)


def elementwise(a: torch.Tensor, b: torch.Tensor, op: ElementwiseOp) -> torch.Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"elementwise {op.value}: shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")
    out = a + b if op is ElementwiseOp.ADD else a * b
    return _finite(out, op.value)


def add(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    return elementwise(a, b, ElementwiseOp.ADD)


def mul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    return elementwise(a, b, ElementwiseOp.MUL)


def sigmoid(x: torch.Tensor) -> torch.Tensor:
    return torch.sigmoid(x)


def softplus(x: torch.Tensor) -> torch.Tensor:
    return F.softplus(x)


def crop(x: torch.Tensor, height: int, width: int) -> torch.Tensor:
    """Top-left crop to (height, width)."""
    h, w = spatial_shape(x)
    if height > h or width > w:
        raise ShapeError(f"crop: cannot crop {h}x{w} to {height}x{width}")
    return x[..., :height, :width, :]


def _same_padding(size: int, k: int, stride: int) -> int:
    out = math.ceil(size / stride)
    return max((out - 1) * stride + k - size, 0)


def _channel_last(fn, x: torch.Tensor, *args) -> torch.Tensor:
    batched = x.dim() == 4
    nchw = (x if batched else x.unsqueeze(0)).permute(0, 3, 1, 2)
    out = fn(nchw, *args).permute(0, 2, 3, 1)
    return out if batched else out.squeeze(0)


def _check_rank(x: torch.Tensor):
    if x.dim() not in (3, 4):
        raise ShapeError(f"expected (H, W, C) or (B, H, W, C) tensor, got shape {tuple(x.shape)}")


def _finite(out: torch.Tensor, op_name: str) -> torch.Tensor:
    if CHECK_FINITE and not torch.isfinite(out).all():
        raise InvariantViolation(f"{op_name} produced non-finite values")
    return out
