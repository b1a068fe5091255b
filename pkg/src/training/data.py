"""
Synthetic YUV420 patches with controllable luma/chroma correlation.

Y is a smoothed noise field; each chroma plane mixes an affine map of the
downsampled Y with an independent smoothed field:

    U = corr * (0.25 + 0.5 * DS(Y)) + (1 - corr) * noise_U
    V = corr * (0.75 - 0.5 * DS(Y)) + (1 - corr) * noise_V

so every plane stays in [0, 1].
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import torch
from scipy.ndimage import gaussian_filter

from ..color import downsample_plane
from ..tensor import DTYPE
from ..utils.errors import ConfigError, ShapeError

LUMA_SMOOTHING = 2.0
CHROMA_SMOOTHING = 1.0


@dataclass
class SynthDataset:
    """Planes in [0, 1]: ``y`` is (count, H, W, 1), ``u`` and ``v`` are (count, H/2, W/2, 1)."""
    y: torch.Tensor
    u: torch.Tensor
    v: torch.Tensor
    corr: float
    seed: int

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def patch(self) -> int:
        return self.y.shape[1]

    def batch(self, indices) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        index = torch.as_tensor(np.asarray(indices), dtype=torch.long)
        return self.y[index], self.u[index], self.v[index]


def _normalized_field(rng: np.random.Generator, count: int, size: int, sigma: float) -> np.ndarray:
    field = gaussian_filter(rng.standard_normal((count, size, size)), sigma=(0, sigma, sigma), mode="wrap")
    lo = field.min(axis=(1, 2), keepdims=True)
    hi = field.max(axis=(1, 2), keepdims=True)
    return (field - lo) / np.maximum(hi - lo, 1e-12)


def synth_dataset(seed: int, count: int, corr: float, patch: int = 32) -> SynthDataset:
    """
    Generate ``count`` correlated YUV420 patches.

    Args:
        seed: Generator seed
        count: Number of patches
        corr: Weight of the luma-driven term in the chroma planes, in [0, 1]
        patch: Luma patch size (even)

    Returns:
        SynthDataset
    """
    if not 0.0 <= corr <= 1.0:
        raise ConfigError(f"corr must be in [0, 1], got {corr}")
    if count <= 0:
        raise ConfigError(f"count must be positive, got {count}")
    if patch <= 0 or patch % 2:
        raise ShapeError(f"patch must be even and positive, got {patch}")

    rng = np.random.default_rng(seed)
    y = _normalized_field(rng, count, patch, LUMA_SMOOTHING)
    noise_u = _normalized_field(rng, count, patch // 2, CHROMA_SMOOTHING)
    noise_v = _normalized_field(rng, count, patch // 2, CHROMA_SMOOTHING)

    ds_y = downsample_plane(np.moveaxis(y, 0, -1))
    ds_y = np.moveaxis(ds_y, -1, 0)
    u = corr * (0.25 + 0.5 * ds_y) + (1.0 - corr) * noise_u
    v = corr * (0.75 - 0.5 * ds_y) + (1.0 - corr) * noise_v

    def as_tensor(a):
        return torch.from_numpy(np.ascontiguousarray(a)).to(DTYPE).unsqueeze(-1)

    return SynthDataset(y=as_tensor(y), u=as_tensor(u), v=as_tensor(v), corr=corr, seed=seed)


def chroma_correlation(dataset: SynthDataset) -> float:
    """Pearson correlation between DS(Y) and U pooled over all patches."""
    y = dataset.y[..., 0].numpy()
    ds_y = np.moveaxis(downsample_plane(np.moveaxis(y, 0, -1)), -1, 0)
    return float(np.corrcoef(ds_y.reshape(-1), dataset.u[..., 0].numpy().reshape(-1))[0, 1])
