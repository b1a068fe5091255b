"""
Entropy coding of one component's latents.

Hyper-latents are coded position by position in raster order against the
factorized prior. Main latents are coded autoregressively: at every position
the context model sees the already-coded neighbourhood, the gather network
fuses it with the hyper-decoder output and the resulting mixture parameters
select the coding tables. Encoder and decoder run the same per-position
routine on a progressively filled buffer, so both derive bit-identical
parameters.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import torch

from .. import tensor as T
from ..entropy import (
    RangeDecoder,
    RangeEncoder,
    ScaleTableCache,
    clamp_latent,
    decode_values,
    encode_values,
    factorized_tables,
    gaussian_tables,
    quantize_latent,
    split_gather_output,
)
from ..networks import Role, forward
from ..tensor import DTYPE, causal_mask
from ..utils.errors import ShapeError
from .models import ComponentModel

logger = logging.getLogger(__name__)

CONTEXT_RADIUS = 2


@dataclass
class CodedComponent:
    """Substreams, quantized latents and table probabilities of one component."""
    z_stream: bytes
    y_stream: bytes
    z_hat: torch.Tensor
    y_hat: torch.Tensor
    z_probs: List[float]
    y_probs: List[float]


class ComponentCoder:
    """Analysis, hyper synthesis and entropy coding for one component."""

    def __init__(self, model: ComponentModel, table_mode: str = "exact", scale_cache: Optional[ScaleTableCache] = None):
        self.model = model
        self.table_mode = table_mode
        self.scale_cache = scale_cache
        if table_mode == "scale_table" and scale_cache is None:
            self.scale_cache = ScaleTableCache()

        context = model.store(Role.CONTEXT).kernel(0, "conv")
        self._ctx_weight = (context.weight * causal_mask(context.k_h, context.k_w)).detach()
        self._ctx_bias = context.bias.detach()
        self._prior_tables = factorized_tables(model.prior)
        self.logger = logging.getLogger(self.__class__.__name__)

    @property
    def n(self) -> int:
        return self.model.n

    def analyze(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """Encoder and hyper encoder; returns clamped integer (y_hat, z_hat)."""
        with torch.no_grad():
            y = forward(self.model.spec(Role.ENCODER), self.model.store(Role.ENCODER), x)
            z = forward(self.model.spec(Role.HYPER_ENC), self.model.store(Role.HYPER_ENC), y)
        return clamp_latent(quantize_latent(y)), clamp_latent(quantize_latent(z))

    def hyper_synthesis(self, z_hat: torch.Tensor, height: int, width: int) -> torch.Tensor:
        with torch.no_grad():
            out = forward(self.model.spec(Role.HYPER_DEC), self.model.store(Role.HYPER_DEC), z_hat)
        return T.crop(out, height, width)

    def synthesize(self, decoder_input: torch.Tensor) -> torch.Tensor:
        with torch.no_grad():
            return forward(self.model.spec(Role.DECODER), self.model.store(Role.DECODER), decoder_input)

    # Hyper-latents

    def encode_hyper(self, z_hat: torch.Tensor) -> Tuple[bytes, List[float]]:
        encoder = RangeEncoder()
        probs = []
        h, w = T.spatial_shape(z_hat)
        values = z_hat.detach().numpy().astype(np.int64)
        for i in range(h):
            for j in range(w):
                probs += encode_values(encoder, values[i, j], self._prior_tables)
        return encoder.finish(), probs

    def decode_hyper(self, data: bytes, height: int, width: int) -> torch.Tensor:
        decoder = RangeDecoder(data)
        out = np.zeros((height, width, self.n), dtype=np.int64)
        for i in range(height):
            for j in range(width):
                out[i, j] = decode_values(decoder, self._prior_tables)
        return torch.from_numpy(out).to(DTYPE)

    # Main latents

    def _position_tables(self, buffer: torch.Tensor, hyper_out: torch.Tensor, i: int, j: int, trace: Optional[list]):
        size = 2 * CONTEXT_RADIUS + 1
        window = buffer[i:i + size, j:j + size, :]
        ctx = torch.einsum("hwc,ochw->o", window, self._ctx_weight) + self._ctx_bias
        fused = torch.cat([hyper_out[i, j], ctx]).reshape(1, 1, -1)
        gather = forward(self.model.spec(Role.GATHER), self.model.store(Role.GATHER), fused)
        field = split_gather_output(gather, self.n, self.model.mixtures)

        mu = field.mu[0, 0].numpy()
        sigma = field.sigma[0, 0].numpy()
        weights = field.weights[0, 0].numpy()
        if trace is not None:
            trace.append((mu.copy(), sigma.copy(), weights.copy()))
        if self.table_mode == "scale_table":
            return self.scale_cache.tables(mu, sigma)
        return gaussian_tables(mu, sigma, weights)

    def _buffer(self, height: int, width: int) -> torch.Tensor:
        pad = 2 * CONTEXT_RADIUS
        return torch.zeros(height + pad, width + pad, self.n, dtype=DTYPE)

    def encode_latent(self, y_hat: torch.Tensor, hyper_out: torch.Tensor, trace: Optional[list] = None) -> Tuple[bytes, List[float]]:
        h, w = T.spatial_shape(y_hat)
        if T.spatial_shape(hyper_out) != (h, w) or hyper_out.shape[-1] != 2 * self.n:
            raise ShapeError(f"hyper output {tuple(hyper_out.shape)} does not fit latent {tuple(y_hat.shape)}")
        encoder = RangeEncoder()
        buffer = self._buffer(h, w)
        values = y_hat.detach().numpy().astype(np.int64)
        probs = []
        with torch.no_grad():
            for i in range(h):
                for j in range(w):
                    tables = self._position_tables(buffer, hyper_out, i, j, trace)
                    probs += encode_values(encoder, values[i, j], tables)
                    buffer[i + CONTEXT_RADIUS, j + CONTEXT_RADIUS] = y_hat[i, j]
        return encoder.finish(), probs

    def decode_latent(self, data: bytes, hyper_out: torch.Tensor, trace: Optional[list] = None) -> torch.Tensor:
        h, w = T.spatial_shape(hyper_out)
        decoder = RangeDecoder(data)
        buffer = self._buffer(h, w)
        with torch.no_grad():
            for i in range(h):
                for j in range(w):
                    tables = self._position_tables(buffer, hyper_out, i, j, trace)
                    values = decode_values(decoder, tables)
                    buffer[i + CONTEXT_RADIUS, j + CONTEXT_RADIUS] = torch.from_numpy(values).to(DTYPE)
        r = CONTEXT_RADIUS
        return buffer[r:r + h, r:r + w].clone()

    # Whole component

    def encode(self, x: torch.Tensor, trace: Optional[list] = None) -> CodedComponent:
        y_hat, z_hat = self.analyze(x)
        h, w = T.spatial_shape(y_hat)
        z_stream, z_probs = self.encode_hyper(z_hat)
        hyper_out = self.hyper_synthesis(z_hat, h, w)
        y_stream, y_probs = self.encode_latent(y_hat, hyper_out, trace)
        self.logger.debug(
            f"{self.model.name}: y {tuple(y_hat.shape)} -> {len(y_stream)} B, z {tuple(z_hat.shape)} -> {len(z_stream)} B"
        )
        return CodedComponent(z_stream, y_stream, z_hat, y_hat, z_probs, y_probs)

    def decode(self, z_stream: bytes, y_stream: bytes, latent_height: int, latent_width: int,
               trace: Optional[list] = None) -> Tuple[torch.Tensor, torch.Tensor]:
        """Returns (y_hat, z_hat)."""
        z_h, z_w = hyper_latent_size(latent_height, latent_width)
        z_hat = self.decode_hyper(z_stream, z_h, z_w)
        hyper_out = self.hyper_synthesis(z_hat, latent_height, latent_width)
        return self.decode_latent(y_stream, hyper_out, trace), z_hat


def hyper_latent_size(height: int, width: int) -> Tuple[int, int]:
    """Hyper-latent grid of a latent grid (two stride-2 stages)."""
    return -(-height // 4), -(-width // 4)
