"""
End-to-end CCS coding.

Y is the primary component and is coded on its own. The UV pair is encoded
from concat(DS(Y), U, V) and decoded from concat(DS(y_hat_Y), y_hat_UV) when
the model is conditional; without conditioning the UV path never touches Y.
The two component paths can run on two workers: encode shares only the
downsampled Y plane, decode shares only the quantized Y latent.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
import torch

from .. import tensor as T
from ..color import ImageYUV420
from ..entropy import ScaleTableCache, rate_estimate
from ..utils.errors import ConfigError, FormatError, ShapeError
from .bitstream import Bitstream
from .coding import ComponentCoder
from .models import CCSModelSet

logger = logging.getLogger(__name__)

BLOCK = 128
LATENT_STRIDE_Y = 16
LATENT_STRIDE_UV = 32


@dataclass
class LatentBundle:
    """Quantized latents of both components."""
    y_y: torch.Tensor
    z_y: torch.Tensor
    y_uv: torch.Tensor
    z_uv: torch.Tensor

    def __eq__(self, other) -> bool:
        if not isinstance(other, LatentBundle):
            return NotImplemented
        return all(
            torch.equal(getattr(self, name), getattr(other, name)) for name in ("y_y", "z_y", "y_uv", "z_uv")
        )


@dataclass
class EncodeResult:
    bitstream: Bitstream
    latents: LatentBundle
    estimated_bits: Dict[str, float]
    seconds: float = 0.0

    @property
    def actual_bits(self) -> Dict[str, int]:
        return self.bitstream.substream_bits()

    @property
    def bpp(self) -> float:
        width, height = self.bitstream.output_size
        return 8 * len(self.bitstream.serialize()) / (width * height)


@dataclass
class DecodeResult:
    image: ImageYUV420
    latents: LatentBundle
    seconds: float = 0.0
    traces: Dict[str, list] = field(default_factory=dict)


def pad_to_block(yuv: ImageYUV420, block: int = BLOCK) -> Tuple[ImageYUV420, Optional[Tuple[int, int]]]:
    """Reflect-pad to a multiple of ``block``; returns the original (width, height) when padding was needed."""
    h, w = yuv.height, yuv.width
    ph, pw = -h % block, -w % block
    if ph == 0 and pw == 0:
        return yuv, None
    padded = ImageYUV420(
        y=np.pad(yuv.y, ((0, ph), (0, pw)), mode="reflect"),
        u=np.pad(yuv.u, ((0, ph // 2), (0, pw // 2)), mode="reflect"),
        v=np.pad(yuv.v, ((0, ph // 2), (0, pw // 2)), mode="reflect"),
    )
    return padded, (w, h)


def crop_image(yuv: ImageYUV420, size: Optional[Tuple[int, int]]) -> ImageYUV420:
    if size is None:
        return yuv
    w, h = size
    return ImageYUV420(y=yuv.y[:h, :w], u=yuv.u[:h // 2, :w // 2], v=yuv.v[:h // 2, :w // 2])


def _plane(values: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(values.astype(np.float64) / 255.0)


def _to_uint8(x: torch.Tensor) -> np.ndarray:
    return torch.round(torch.clamp(x, 0.0, 1.0) * 255.0).numpy().astype(np.uint8)


class CCSCodec:
    """
    Encoder and decoder for one model set.

    Args:
        models: Y and UV networks with weights
        config: Codec options; ``workers`` (1 or 2) is the default worker count
    """

    def __init__(self, models: CCSModelSet, config: Optional[Dict[str, Any]] = None):
        self.models = models
        self.config = config or {}
        self.model_config = models.config
        self.workers = int(self.config.get("workers", 1))
        self._check_workers(self.workers)

        scale_cache = ScaleTableCache() if self.model_config.table_mode == "scale_table" else None
        self.coders = {
            "y": ComponentCoder(models.y, self.model_config.table_mode, scale_cache),
            "uv": ComponentCoder(models.uv, self.model_config.table_mode, scale_cache),
        }
        self.logger = logging.getLogger(self.__class__.__name__)

    @staticmethod
    def _check_workers(workers: int):
        if workers not in (1, 2):
            raise ConfigError(f"workers must be 1 or 2, got {workers}")

    # Inputs

    def _inputs(self, yuv: ImageYUV420) -> Tuple[torch.Tensor, torch.Tensor]:
        x_y = _plane(yuv.y).unsqueeze(-1)
        x_uv = torch.stack([_plane(yuv.u), _plane(yuv.v)], dim=-1)
        if self.model_config.conditional:
            x_uv = T.concat_channels(T.avg_downsample2(x_y), x_uv)
        return x_y, x_uv

    # Encoding

    def encode(self, yuv: ImageYUV420, workers: Optional[int] = None) -> Bitstream:
        return self.encode_with_stats(yuv, workers).bitstream

    def encode_with_stats(self, yuv: ImageYUV420, workers: Optional[int] = None,
                          traces: Optional[Dict[str, list]] = None) -> EncodeResult:
        """
        Encode an image and report latents and rate estimates.

        Args:
            yuv: Input image with even dimensions
            workers: 1 (serial) or 2 (Y and UV paths concurrently)
            traces: Optional dict receiving the per-position mixture parameters under "y" and "uv"

        Returns:
            EncodeResult
        """
        workers = self.workers if workers is None else workers
        self._check_workers(workers)
        start = time.perf_counter()

        padded, original = pad_to_block(yuv)
        x_y, x_uv = self._inputs(padded)
        trace_y = traces.setdefault("y", []) if traces is not None else None
        trace_uv = traces.setdefault("uv", []) if traces is not None else None

        if workers == 2:
            with ThreadPoolExecutor(max_workers=2) as pool:
                future_y = pool.submit(self.coders["y"].encode, x_y, trace_y)
                future_uv = pool.submit(self.coders["uv"].encode, x_uv, trace_uv)
                coded_y, coded_uv = future_y.result(), future_uv.result()
        else:
            coded_y = self.coders["y"].encode(x_y, trace_y)
            coded_uv = self.coders["uv"].encode(x_uv, trace_uv)

        cfg = self.model_config
        bitstream = Bitstream(
            width=padded.width, height=padded.height, n_y=cfg.n_y, n_uv=cfg.n_uv,
            lambda_id=cfg.lambda_id, conditional=cfg.conditional, original_size=original,
            z_y=coded_y.z_stream, y_y=coded_y.y_stream, z_uv=coded_uv.z_stream, y_uv=coded_uv.y_stream,
        )
        latents = LatentBundle(y_y=coded_y.y_hat, z_y=coded_y.z_hat, y_uv=coded_uv.y_hat, z_uv=coded_uv.z_hat)
        estimated = {
            "z_y": rate_estimate(coded_y.z_hat, coded_y.z_probs),
            "y_y": rate_estimate(coded_y.y_hat, coded_y.y_probs),
            "z_uv": rate_estimate(coded_uv.z_hat, coded_uv.z_probs),
            "y_uv": rate_estimate(coded_uv.y_hat, coded_uv.y_probs),
        }
        result = EncodeResult(bitstream, latents, estimated, time.perf_counter() - start)
        self.logger.info(f"Encoded {yuv.width}x{yuv.height} with {cfg.name}: {result.bpp:.4f} bpp "
                         f"in {result.seconds:.2f}s ({workers} worker(s))")
        return result

    # Decoding

    def _check_header(self, bs: Bitstream):
        cfg = self.model_config
        if (bs.n_y, bs.n_uv, bs.conditional) != (cfg.n_y, cfg.n_uv, cfg.conditional):
            raise ConfigError(
                f"bitstream was coded with N_Y={bs.n_y} N_UV={bs.n_uv} conditional={bs.conditional}, "
                f"models are {cfg.name}"
            )
        if bs.lambda_id != cfg.lambda_id:
            raise FormatError(f"bitstream was coded at lambda index {bs.lambda_id}, models are for index {cfg.lambda_id}")
        if bs.width % BLOCK or bs.height % BLOCK:
            raise ShapeError(f"coded size {bs.width}x{bs.height} is not a multiple of {BLOCK}")

    def _decode_y_latents(self, bs: Bitstream, trace=None):
        return self.coders["y"].decode(bs.z_y, bs.y_y, bs.height // LATENT_STRIDE_Y, bs.width // LATENT_STRIDE_Y, trace)

    def _decode_uv_latents(self, bs: Bitstream, trace=None):
        return self.coders["uv"].decode(bs.z_uv, bs.y_uv, bs.height // LATENT_STRIDE_UV, bs.width // LATENT_STRIDE_UV, trace)

    def _uv_decoder_input(self, y_hat_uv: torch.Tensor, y_hat_y: Optional[torch.Tensor]) -> torch.Tensor:
        if not self.model_config.conditional:
            return y_hat_uv
        return T.concat_channels(T.avg_downsample2(y_hat_y), y_hat_uv)

    def decode(self, bs: Bitstream, workers: Optional[int] = None) -> ImageYUV420:
        return self.decode_with_stats(bs, workers).image

    def decode_with_stats(self, bs: Bitstream, workers: Optional[int] = None, trace: bool = False) -> DecodeResult:
        """
        Decode a bitstream.

        Args:
            bs: Parsed bitstream
            workers: 1 (serial) or 2 (Y and UV paths concurrently)
            trace: Record the per-position mixture parameters

        Returns:
            DecodeResult with the cropped image and the decoded latents
        """
        workers = self.workers if workers is None else workers
        self._check_workers(workers)
        self._check_header(bs)
        start = time.perf_counter()
        traces = {"y": [], "uv": []} if trace else {}
        trace_y, trace_uv = traces.get("y"), traces.get("uv")

        if workers == 2:
            with ThreadPoolExecutor(max_workers=2) as pool:
                future_y = pool.submit(self._decode_y_latents, bs, trace_y)

                def uv_path():
                    y_hat_uv, z_hat_uv = self._decode_uv_latents(bs, trace_uv)
                    y_hat_y = future_y.result()[0] if self.model_config.conditional else None
                    recon = self.coders["uv"].synthesize(self._uv_decoder_input(y_hat_uv, y_hat_y))
                    return recon, y_hat_uv, z_hat_uv

                future_uv = pool.submit(uv_path)
                y_hat_y, z_hat_y = future_y.result()
                recon_y = self.coders["y"].synthesize(y_hat_y)
                recon_uv, y_hat_uv, z_hat_uv = future_uv.result()
        else:
            y_hat_y, z_hat_y = self._decode_y_latents(bs, trace_y)
            recon_y = self.coders["y"].synthesize(y_hat_y)
            y_hat_uv, z_hat_uv = self._decode_uv_latents(bs, trace_uv)
            recon_uv = self.coders["uv"].synthesize(self._uv_decoder_input(y_hat_uv, y_hat_y))

        image = ImageYUV420(y=_to_uint8(recon_y[..., 0]), u=_to_uint8(recon_uv[..., 0]), v=_to_uint8(recon_uv[..., 1]))
        image = crop_image(image, bs.original_size)
        latents = LatentBundle(y_y=y_hat_y, z_y=z_hat_y, y_uv=y_hat_uv, z_uv=z_hat_uv)
        seconds = time.perf_counter() - start
        self.logger.info(f"Decoded {image.width}x{image.height} in {seconds:.2f}s ({workers} worker(s))")
        return DecodeResult(image, latents, seconds, traces)

    def decode_latents(self, bs: Bitstream) -> LatentBundle:
        self._check_header(bs)
        y_hat_y, z_hat_y = self._decode_y_latents(bs)
        y_hat_uv, z_hat_uv = self._decode_uv_latents(bs)
        return LatentBundle(y_y=y_hat_y, z_y=z_hat_y, y_uv=y_hat_uv, z_uv=z_hat_uv)

    def decode_y(self, bs: Bitstream) -> np.ndarray:
        """Reconstruct the Y plane from the Y substreams alone."""
        self._check_header(bs)
        y_hat_y, _ = self._decode_y_latents(bs)
        plane = _to_uint8(self.coders["y"].synthesize(y_hat_y)[..., 0])
        width, height = bs.output_size
        return plane[:height, :width]
