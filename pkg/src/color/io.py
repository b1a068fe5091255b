"""
Image files: binary P6 portable pixmaps and raw planar I420.
"""

import logging
import re
from pathlib import Path
from typing import Union

import numpy as np

from ..utils.errors import FormatError, ShapeError
from .convert import ImageRGB, ImageYUV420

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Magic, then width, height, maxval separated by whitespace or comments,
# then exactly one whitespace byte before the samples.
_PPM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def read_ppm(path: PathLike) -> ImageRGB:
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    for _ in range(4):
        match = _PPM_TOKEN.match(data, pos)
        if match is None:
            raise FormatError(f"{path}: malformed PPM header")
        tokens.append(match.group(1))
        pos = match.end()

    if tokens[0] != b"P6":
        raise FormatError(f"{path}: not a binary PPM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError(f"{path}: non-numeric PPM header field") from None
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: invalid dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}, only 255 is accepted")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError(f"{path}: missing separator after PPM header")

    payload = data[pos + 1:]
    expected = width * height * 3
    if len(payload) < expected:
        raise FormatError(f"{path}: truncated PPM payload ({len(payload)} of {expected} bytes)")
    pixels = np.frombuffer(payload[:expected], dtype=np.uint8).reshape(height, width, 3)
    return ImageRGB(pixels.copy())


def write_ppm(path: PathLike, img: ImageRGB):
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(img.pixels, dtype=np.uint8).tobytes())


def read_i420(path: PathLike, width: int, height: int) -> ImageYUV420:
    """Read raw planar I420 (Y, then U, then V) of the given size."""
    if width <= 0 or height <= 0 or width % 2 or height % 2:
        raise ShapeError(f"I420 dimensions must be even and positive, got {width}x{height}")
    data = Path(path).read_bytes()
    luma = width * height
    chroma = luma // 4
    if len(data) != luma + 2 * chroma:
        raise FormatError(f"{path}: I420 size {len(data)} does not match {width}x{height} ({luma + 2 * chroma} bytes)")
    buf = np.frombuffer(data, dtype=np.uint8)
    return ImageYUV420(
        y=buf[:luma].reshape(height, width).copy(),
        u=buf[luma:luma + chroma].reshape(height // 2, width // 2).copy(),
        v=buf[luma + chroma:].reshape(height // 2, width // 2).copy(),
    )


def write_i420(path: PathLike, yuv: ImageYUV420):
    Path(path).write_bytes(b"".join(np.ascontiguousarray(p).tobytes() for p in (yuv.y, yuv.u, yuv.v)))


def read_image(path: PathLike, format: str = "ppm", width: int = 0, height: int = 0):
    """
    Read an image file.

    Args:
        path: File path
        format: "ppm" for P6 RGB, "i420" (or "i420_raw") for planar YUV420
        width: Raw width (I420 only)
        height: Raw height (I420 only)

    Returns:
        ImageRGB for PPM, ImageYUV420 for I420
    """
    fmt = format.lower()
    if fmt == "ppm":
        return read_ppm(path)
    if fmt in ("i420", "i420_raw", "yuv"):
        return read_i420(path, width, height)
    raise FormatError(f"unsupported image format {format!r}")


def write_image(path: PathLike, image):
    if isinstance(image, ImageRGB):
        write_ppm(path, image)
    elif isinstance(image, ImageYUV420):
        write_i420(path, image)
    else:
        raise FormatError(f"cannot write {type(image).__name__}")
    logger.debug(f"Wrote {type(image).__name__} to {path}")
