"""
RGB <-> YUV420 conversion (BT.601 full range).

Y is the primary component; U and V are subsampled by two in each direction
with a 2x2 mean and upsampled back by pixel replication.
"""

from dataclasses import dataclass

import numpy as np

from ..utils.errors import FormatError, ShapeError

KR = 0.299
KB = 0.114
KG = 1.0 - KR - KB

# Rows produce Y, U, V from R, G, B; U and V are centred on 128.
RGB_TO_YUV = np.array(
    [
        [KR, KG, KB],
        [-0.5 * KR / (1.0 - KB), -0.5 * KG / (1.0 - KB), 0.5],
        [0.5, -0.5 * KG / (1.0 - KR), -0.5 * KB / (1.0 - KR)],
    ]
)
YUV_TO_RGB = np.linalg.inv(RGB_TO_YUV)
CHROMA_OFFSET = np.array([0.0, 128.0, 128.0])


def as_samples(values, name: str = "image") -> np.ndarray:
    """8-bit view of ``values``; anything that would not survive the cast unchanged is rejected."""
    values = np.asarray(values)
    if values.dtype == np.uint8:
        return values
    if not (np.issubdtype(values.dtype, np.integer) or np.issubdtype(values.dtype, np.floating)):
        raise FormatError(f"{name} samples must be numeric, got {values.dtype}")
    if values.size and (not np.all(np.isfinite(values)) or values.min() < 0 or values.max() > 255
                        or np.any(values != np.rint(values))):
        raise FormatError(f"{name} samples must be integers in [0, 255]")
    return values.astype(np.uint8)


@dataclass
class ImageRGB:
    """Interleaved 8-bit RGB image, ``pixels`` shaped (H, W, 3)."""
    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ShapeError(f"RGB image must be (H, W, 3), got {self.pixels.shape}")
        if self.pixels.shape[0] <= 0 or self.pixels.shape[1] <= 0:
            raise ShapeError("RGB image must be non-empty")
        self.pixels = as_samples(self.pixels, "RGB")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass
class ImageYUV420:
    """Planar 8-bit YUV420 image: Y is (H, W), U and V are (H/2, W/2)."""
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.y, self.u, self.v = (as_samples(p, name) for p, name in ((self.y, "Y"), (self.u, "U"), (self.v, "V")))
        if self.y.ndim != 2:
            raise ShapeError(f"Y plane must be 2-D, got {self.y.shape}")
        h, w = self.y.shape
        if h % 2 or w % 2 or h == 0 or w == 0:
            raise ShapeError(f"YUV420 needs even, non-zero dimensions, got {w}x{h}")
        for name, plane in (("U", self.u), ("V", self.v)):
            if plane.shape != (h // 2, w // 2):
                raise ShapeError(f"{name} plane is {plane.shape}, expected {(h // 2, w // 2)}")

    @property
    def height(self) -> int:
        return self.y.shape[0]

    @property
    def width(self) -> int:
        return self.y.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageYUV420):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip((self.y, self.u, self.v), (other.y, other.u, other.v)))


def downsample_plane(plane: np.ndarray) -> np.ndarray:
    """2x2 mean of a real plane with even dimensions."""
    h, w = plane.shape[:2]
    if h % 2 or w % 2:
        raise ShapeError(f"cannot halve {w}x{h}")
    return plane.reshape(h // 2, 2, w // 2, 2, *plane.shape[2:]).mean(axis=(1, 3))


def upsample_plane(plane: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(plane, 2, axis=0), 2, axis=1)


def _to_uint8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(values), 0, 255).astype(np.uint8)


def rgb_to_yuv420(img: ImageRGB) -> ImageYUV420:
    """Convert RGB to YUV420; chroma is averaged over 2x2 blocks before rounding."""
    if img.height % 2 or img.width % 2:
        raise ShapeError(f"RGB to YUV420 needs even dimensions, got {img.width}x{img.height}")
    yuv = img.pixels.astype(np.float64) @ RGB_TO_YUV.T + CHROMA_OFFSET
    return ImageYUV420(
        y=_to_uint8(yuv[..., 0]),
        u=_to_uint8(downsample_plane(yuv[..., 1])),
        v=_to_uint8(downsample_plane(yuv[..., 2])),
    )


def yuv420_to_rgb(yuv: ImageYUV420) -> ImageRGB:
    planes = np.stack(
        [
            yuv.y.astype(np.float64),
            upsample_plane(yuv.u.astype(np.float64)),
            upsample_plane(yuv.v.astype(np.float64)),
        ],
        axis=-1,
    )
    rgb = (planes - CHROMA_OFFSET) @ YUV_TO_RGB.T
    return ImageRGB(_to_uint8(rgb))
