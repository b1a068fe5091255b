"""
Colour conversion and image file tests.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from src.color import (
    RGB_TO_YUV,
    YUV_TO_RGB,
    ImageRGB,
    ImageYUV420,
    read_i420,
    read_image,
    read_ppm,
    rgb_to_yuv420,
    write_image,
    write_ppm,
    yuv420_to_rgb,
)
from src.utils.errors import FormatError, ShapeError


def solid(rgb, size=4):
    return ImageRGB(np.tile(np.array(rgb, dtype=np.uint8), (size, size, 1)))


class TestConversion:
    """BT.601 full-range RGB <-> YUV420"""

    @pytest.mark.parametrize("g", [0, 17, 128, 255])
    def test_gray_axis(self, g):
        yuv = rgb_to_yuv420(solid((g, g, g)))
        assert np.all(yuv.y == g)
        assert np.all(yuv.u == 128) and np.all(yuv.v == 128)

    def test_red_luma(self):
        assert rgb_to_yuv420(solid((255, 0, 0), 2)).y[0, 0] == 76

    @pytest.mark.parametrize("g", [0, 90, 255])
    def test_gray_inverse(self, g):
        yuv = ImageYUV420(
            y=np.full((4, 4), g, np.uint8), u=np.full((2, 2), 128, np.uint8), v=np.full((2, 2), 128, np.uint8)
        )
        assert np.all(yuv420_to_rgb(yuv).pixels == g)

    def test_uniform_colour_round_trip(self):
        img = solid((200, 30, 90), 8)
        back = yuv420_to_rgb(rgb_to_yuv420(img))
        assert np.abs(back.pixels.astype(int) - img.pixels.astype(int)).max() <= 1

    def test_extreme_values_clamped(self):
        yuv = ImageYUV420(
            y=np.full((2, 2), 255, np.uint8), u=np.full((1, 1), 255, np.uint8), v=np.full((1, 1), 0, np.uint8)
        )
        rgb = yuv420_to_rgb(yuv).pixels
        assert rgb.dtype == np.uint8 and rgb.shape == (2, 2, 3)

    def test_smooth_gradient_error(self):
        x = np.linspace(0, 255, 64)
        pixels = np.stack(np.broadcast_arrays(x[None, :], x[:, None], (x[None, :] + x[:, None]) / 2), axis=-1)
        img = ImageRGB(np.rint(pixels).astype(np.uint8))
        back = yuv420_to_rgb(rgb_to_yuv420(img))
        err = np.abs(back.pixels.astype(float) - img.pixels.astype(float)).mean(axis=(0, 1))
        assert np.all(err <= 3.0)

    def test_odd_dimensions_rejected(self):
        with pytest.raises(ShapeError):
            rgb_to_yuv420(ImageRGB(np.zeros((3, 4, 3), np.uint8)))

    def test_chroma_plane_shape_checked(self):
        with pytest.raises(ShapeError):
            ImageYUV420(y=np.zeros((4, 4), np.uint8), u=np.zeros((2, 2), np.uint8), v=np.zeros((2, 1), np.uint8))

    def test_matrices_are_inverse(self):
        assert np.allclose(RGB_TO_YUV @ YUV_TO_RGB, np.eye(3), rtol=0, atol=1e-12)
        assert np.allclose(YUV_TO_RGB @ RGB_TO_YUV, np.eye(3), rtol=0, atol=1e-12)

    def test_luma_has_four_times_chroma_samples(self, rgb_image):
        yuv = rgb_to_yuv420(rgb_image)
        assert yuv.y.size == 4 * yuv.u.size == 4 * yuv.v.size


class TestSampleRange:
    """8-bit sample validation"""

    @pytest.mark.parametrize("value", [256, -1, 300.0, 12.5, np.nan])
    def test_out_of_range_rejected(self, value):
        with pytest.raises(FormatError):
            ImageRGB(np.full((2, 2, 3), value))
        with pytest.raises(FormatError):
            ImageYUV420(y=np.full((2, 2), value), u=np.zeros((1, 1), np.uint8), v=np.zeros((1, 1), np.uint8))

    def test_integral_values_accepted(self):
        img = ImageRGB(np.full((2, 2, 3), 255.0))
        assert img.pixels.dtype == np.uint8 and np.all(img.pixels == 255)
        yuv = ImageYUV420(y=np.full((2, 2), 7, np.int64), u=np.zeros((1, 1)), v=np.full((1, 1), 128))
        assert yuv.y.dtype == np.uint8 and yuv.v[0, 0] == 128

    def test_non_numeric_rejected(self):
        with pytest.raises(FormatError):
            ImageRGB(np.full((2, 2, 3), "a"))


class TestImageFiles:
    """PPM (P6) and raw I420"""

    def test_ppm_round_trip(self, tmp_path, rgb_image):
        write_ppm(tmp_path / "a.ppm", rgb_image)
        assert np.array_equal(read_ppm(tmp_path / "a.ppm").pixels, rgb_image.pixels)

    def test_ppm_header_comments(self, tmp_path):
        pixels = np.arange(12, dtype=np.uint8).reshape(2, 2, 3)
        (tmp_path / "c.ppm").write_bytes(b"P6\n# made by hand\n2 2\n255\n" + pixels.tobytes())
        assert np.array_equal(read_ppm(tmp_path / "c.ppm").pixels, pixels)

    def test_ppm_maxval_rejected(self, tmp_path):
        (tmp_path / "m.ppm").write_bytes(b"P6\n2 2\n65535\n" + bytes(24))
        with pytest.raises(FormatError):
            read_ppm(tmp_path / "m.ppm")

    def test_ppm_truncated(self, tmp_path):
        (tmp_path / "t.ppm").write_bytes(b"P6\n2 2\n255\n" + bytes(5))
        with pytest.raises(FormatError):
            read_ppm(tmp_path / "t.ppm")

    def test_ppm_wrong_magic(self, tmp_path):
        (tmp_path / "p3.ppm").write_bytes(b"P3\n1 1\n255\n0 0 0\n")
        with pytest.raises(FormatError):
            read_ppm(tmp_path / "p3.ppm")

    def test_i420_round_trip(self, tmp_path, yuv_image):
        write_image(tmp_path / "a.yuv", yuv_image)
        assert read_image(tmp_path / "a.yuv", "i420", yuv_image.width, yuv_image.height) == yuv_image

    def test_i420_size_mismatch(self, tmp_path):
        (tmp_path / "s.yuv").write_bytes(bytes(4 * 4 + 3))
        with pytest.raises(FormatError):
            read_i420(tmp_path / "s.yuv", 4, 4)

    def test_unknown_format(self, tmp_path):
        with pytest.raises(FormatError):
            read_image(tmp_path / "x.png", "png")
