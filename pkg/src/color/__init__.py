"""Image types, colour conversion and image file formats."""

from .convert import (
    RGB_TO_YUV,
    YUV_TO_RGB,
    ImageRGB,
    ImageYUV420,
    downsample_plane,
    rgb_to_yuv420,
    upsample_plane,
    yuv420_to_rgb,
)
from .io import read_i420, read_image, read_ppm, write_i420, write_image, write_ppm

__all__ = [
    "RGB_TO_YUV",
    "YUV_TO_RGB",
    "ImageRGB",
    "ImageYUV420",
    "downsample_plane",
    "read_i420",
    "read_image",
    "read_ppm",
    "rgb_to_yuv420",
    "upsample_plane",
    "write_i420",
    "write_image",
    "write_ppm",
    "yuv420_to_rgb",
]
