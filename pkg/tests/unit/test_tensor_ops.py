"""
Tensor core unit tests: convolution, pixel shuffle, activations,
concatenation and downsampling.
"""

import sys
from pathlib import Path

import pytest
import torch

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from src import tensor as T
from src.tensor import DTYPE, ConvKernel, MaskType
from src.utils.errors import InvariantViolation, ShapeError


def kernel(weight, bias=None):
    weight = torch.as_tensor(weight, dtype=DTYPE)
    if bias is None:
        bias = torch.zeros(weight.shape[0], dtype=DTYPE)
    return ConvKernel(weight, torch.as_tensor(bias, dtype=DTYPE))


class TestConv2d:
    """Same-padded convolution"""

    def test_dirac_kernel_is_identity(self):
        w = torch.zeros(1, 1, 3, 3, dtype=DTYPE)
        w[0, 0, 1, 1] = 1.0
        x = torch.randn(5, 7, 1, dtype=DTYPE)
        assert torch.equal(T.conv2d(x, kernel(w)), x)

    def test_ones_kernel_counts_window(self):
        x = torch.ones(4, 4, 1, dtype=DTYPE)
        out = T.conv2d(x, kernel(torch.ones(1, 1, 3, 3)))[..., 0]
        assert out[1, 1] == 9 and out[2, 2] == 9
        assert out[0, 0] == 4 and out[3, 3] == 4 and out[0, 3] == 4
        assert out[0, 1] == 6

    def test_stride_two_shape(self):
        x = torch.randn(16, 16, 3, dtype=DTYPE)
        out = T.conv2d(x, kernel(torch.randn(8, 3, 3, 3)), stride=2)
        assert out.shape == (8, 8, 8)

    def test_odd_size_rounds_up(self):
        x = torch.randn(5, 7, 1, dtype=DTYPE)
        assert T.conv2d(x, kernel(torch.randn(2, 1, 3, 3)), stride=2).shape == (3, 4, 2)

    def test_batched_matches_unbatched(self):
        k = kernel(torch.randn(4, 2, 3, 3), torch.randn(4))
        x = torch.randn(3, 6, 6, 2, dtype=DTYPE)
        batched = T.conv2d(x, k)
        for b in range(3):
            assert torch.allclose(batched[b], T.conv2d(x[b], k))

    def test_linear_in_input(self):
        torch.manual_seed(0)
        k = kernel(torch.randn(3, 2, 5, 5))
        x = torch.randn(9, 6, 2, dtype=DTYPE)
        y = torch.randn(9, 6, 2, dtype=DTYPE)
        for stride in (1, 2):
            combined = T.conv2d(2.5 * x - 0.75 * y, k, stride)
            expected = 2.5 * T.conv2d(x, k, stride) - 0.75 * T.conv2d(y, k, stride)
            assert torch.allclose(combined, expected, atol=1e-12)

    def test_bias_adds_constant(self):
        torch.manual_seed(1)
        w = torch.randn(2, 1, 3, 3)
        x = torch.randn(4, 5, 1, dtype=DTYPE)
        shifted = T.conv2d(x, kernel(w, [1.5, -2.0])) - T.conv2d(x, kernel(w))
        assert torch.allclose(shifted[..., 0], torch.full((4, 5), 1.5, dtype=DTYPE))
        assert torch.allclose(shifted[..., 1], torch.full((4, 5), -2.0, dtype=DTYPE))

    def test_random_shapes(self):
        gen = torch.Generator().manual_seed(2)
        for _ in range(25):
            h, w, c_in, c_out = (int(v) for v in torch.randint(1, 12, (4,), generator=gen))
            k_size = int(torch.randint(0, 3, (1,), generator=gen)) * 2 + 1
            stride = int(torch.randint(1, 3, (1,), generator=gen))
            mask = MaskType.A if k_size > 1 and bool(torch.randint(0, 2, (1,), generator=gen)) else None
            k = kernel(torch.randn(c_out, c_in, k_size, k_size, generator=gen))
            out = T.conv2d(torch.randn(h, w, c_in, dtype=DTYPE, generator=gen), k, stride, mask)
            assert out.shape == (-(-h // stride), -(-w // stride), c_out)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            T.conv2d(torch.zeros(4, 4, 2, dtype=DTYPE), kernel(torch.zeros(1, 3, 3, 3)))

    def test_bad_stride(self):
        with pytest.raises(ShapeError):
            T.conv2d(torch.zeros(4, 4, 1, dtype=DTYPE), kernel(torch.zeros(1, 1, 3, 3)), stride=3)

    def test_bias_shape_validated(self):
        with pytest.raises(ShapeError):
            ConvKernel(torch.zeros(2, 1, 3, 3, dtype=DTYPE), torch.zeros(3, dtype=DTYPE))


class TestCausalMask:
    """Type-A mask of the context model"""

    def test_five_by_five_has_twelve_taps(self):
        mask = T.causal_mask(5, 5)
        assert int(mask.sum()) == 12
        assert mask[2, 2] == 0
        assert mask[2, 1] == 1 and mask[1, 4] == 1
        assert mask[3:].sum() == 0

    def test_output_ignores_current_and_later_positions(self):
        w = torch.ones(1, 1, 5, 5, dtype=DTYPE)
        x = torch.zeros(6, 6, 1, dtype=DTYPE)
        x[3, 3, 0] = 1.0
        out = T.conv2d(x, kernel(w), mask=MaskType.A)[..., 0]
        # only positions after (3, 3) in raster order can see it
        assert out[3, 3] == 0
        assert out[:3].sum() == 0 and out[3, :4].sum() == 0
        assert out[3, 4] == 1 and out[4, 3] == 1


class TestPixelShuffle:
    """Sub-pixel rearrangement"""

    def test_definition(self):
        x = torch.tensor([[[1.0, 2.0, 3.0, 4.0]]], dtype=DTYPE)
        out = T.pixel_shuffle(x, 2)
        assert out.shape == (2, 2, 1)
        assert out[..., 0].tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_shape(self):
        assert T.pixel_shuffle(torch.zeros(8, 8, 16, dtype=DTYPE), 2).shape == (16, 16, 4)

    def test_constant(self):
        out = T.pixel_shuffle(torch.full((3, 3, 8), 2.5, dtype=DTYPE), 2)
        assert torch.all(out == 2.5)

    def test_unshuffle_inverts(self):
        x = torch.randn(4, 6, 12, dtype=DTYPE)
        assert torch.equal(T.pixel_unshuffle(T.pixel_shuffle(x, 2), 2), x)

    def test_indivisible_channels(self):
        with pytest.raises(ShapeError):
            T.pixel_shuffle(torch.zeros(2, 2, 6, dtype=DTYPE), 2)


class TestElementwise:
    """Activations, concatenation, pooling and elementwise ops"""

    def test_leaky_relu(self):
        x = torch.tensor([5.0, -2.0, 0.0], dtype=DTYPE)
        assert torch.allclose(T.leaky_relu(x), torch.tensor([5.0, -0.02, 0.0], dtype=DTYPE))

    def test_concat(self):
        a = torch.randn(8, 8, 2, dtype=DTYPE)
        b = torch.randn(8, 8, 1, dtype=DTYPE)
        out = T.concat_channels(a, b)
        assert out.shape == (8, 8, 3)
        assert torch.equal(out[..., :2], a)

    def test_concat_empty(self):
        x = torch.randn(4, 4, 3, dtype=DTYPE)
        assert torch.equal(T.concat_channels(x, T.empty_channels(4, 4)), x)

    def test_concat_spatial_mismatch(self):
        with pytest.raises(ShapeError):
            T.concat_channels(torch.zeros(4, 4, 1, dtype=DTYPE), torch.zeros(4, 2, 1, dtype=DTYPE))

    def test_downsample_mean(self):
        x = torch.tensor([[[0.0], [0.0]], [[2.0], [2.0]]], dtype=DTYPE)
        assert T.avg_downsample2(x).item() == 1.0

    def test_downsample_shape(self):
        assert T.avg_downsample2(torch.zeros(16, 16, 128, dtype=DTYPE)).shape == (8, 8, 128)

    def test_downsample_odd(self):
        with pytest.raises(ShapeError):
            T.avg_downsample2(torch.zeros(3, 4, 1, dtype=DTYPE))

    def test_downsample_ceil_odd(self):
        x = torch.arange(9, dtype=DTYPE).reshape(3, 3, 1)
        out = T.avg_downsample2(x, ceil=True)
        assert out.shape == (2, 2, 1)
        assert out[0, 0, 0].item() == 2.0
        # the last column is repeated: mean of 2, 2, 5, 5
        assert out[0, 1, 0].item() == 3.5
        assert out[1, 1, 0].item() == 8.0

    def test_downsample_ceil_single_pixel(self):
        x = torch.randn(2, 1, 1, 4, dtype=DTYPE)
        assert torch.allclose(T.avg_downsample2(x, ceil=True), x)

    def test_downsample_ceil_even_unchanged(self):
        x = torch.randn(4, 6, 2, dtype=DTYPE)
        assert torch.equal(T.avg_downsample2(x, ceil=True), T.avg_downsample2(x))

    def test_identities(self):
        x = torch.randn(3, 3, 2, dtype=DTYPE)
        assert torch.equal(T.add(x, torch.zeros_like(x)), x)
        assert torch.equal(T.mul(x, torch.ones_like(x)), x)
        assert T.sigmoid(torch.zeros(1, dtype=DTYPE)).item() == 0.5

    def test_elementwise_shape_mismatch(self):
        with pytest.raises(ShapeError):
            T.add(torch.zeros(2, 2, 1, dtype=DTYPE), torch.zeros(2, 2, 2, dtype=DTYPE))

    def test_crop(self):
        x = torch.randn(8, 8, 2, dtype=DTYPE)
        assert torch.equal(T.crop(x, 5, 3), x[:5, :3])
        with pytest.raises(ShapeError):
            T.crop(x, 9, 3)


class TestActivationPattern:
    """Frozen leaky-ReLU sign patterns"""

    def test_records_then_replays(self):
        x = torch.tensor([[[1.0], [-2.0]]], dtype=DTYPE)
        pattern = T.ActivationPattern()
        with T.frozen_activations(pattern):
            first = T.leaky_relu(x)
            pattern.rewind()
            # signs flip but the recorded pieces are kept
            replayed = T.leaky_relu(-x)
        assert torch.equal(first, torch.nn.functional.leaky_relu(x, 0.01))
        assert replayed[0, 0, 0].item() == -1.0
        assert replayed[0, 1, 0].item() == pytest.approx(0.02)

    def test_rewind_before_recording_keeps_recording(self):
        pattern = T.ActivationPattern()
        pattern.rewind()
        with T.frozen_activations(pattern):
            T.leaky_relu(torch.ones(1, 1, 1, dtype=DTYPE))
        assert len(pattern.masks) == 1 and not pattern.replaying

    def test_mismatched_graph_raises(self):
        pattern = T.ActivationPattern()
        with T.frozen_activations(pattern):
            T.leaky_relu(torch.ones(2, 2, 1, dtype=DTYPE))
            pattern.rewind()
            with pytest.raises(InvariantViolation):
                T.leaky_relu(torch.ones(3, 2, 1, dtype=DTYPE))

    def test_extra_call_raises(self):
        pattern = T.ActivationPattern()
        with T.frozen_activations(pattern):
            T.leaky_relu(torch.ones(1, 1, 1, dtype=DTYPE))
            pattern.rewind()
            T.leaky_relu(torch.ones(1, 1, 1, dtype=DTYPE))
            with pytest.raises(InvariantViolation):
                T.leaky_relu(torch.ones(1, 1, 1, dtype=DTYPE))

    def test_context_is_restored(self):
        x = torch.tensor([[[-1.0]]], dtype=DTYPE)
        with T.frozen_activations() as pattern:
            T.leaky_relu(x)
        T.leaky_relu(x)
        assert len(pattern.masks) == 1
