"""
Shared fixtures: small seeded codecs and smooth synthetic images.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.codec import CCSCodec, CCSModelSet, get_preset
from src.color import ImageRGB, rgb_to_yuv420
from src.networks import Role

# Final convolutions of the analysis transforms; scaling them by a power of
# two keeps seeded float32 weights exact while giving non-zero latents.
LATENT_GAIN = 32.0
GAIN_LAYERS = ((Role.ENCODER, 7), (Role.HYPER_ENC, 8))


def smooth_rgb(seed: int, height: int, width: int, sigma: float = 3.0) -> ImageRGB:
    """Blurred uniform noise with a horizontal gradient, as an 8-bit RGB image."""
    rng = np.random.default_rng(seed)
    noise = gaussian_filter(rng.uniform(0, 255, (height, width, 3)), sigma=(sigma, sigma, 0))
    ramp = np.linspace(-40, 40, width)[None, :, None]
    return ImageRGB(np.clip(np.rint(noise + ramp), 0, 255).astype(np.uint8))


def seeded_models(preset: str, seed: int = 0, **options) -> CCSModelSet:
    """Random models whose latents are large enough to exercise the entropy coder."""
    models = CCSModelSet.random(get_preset(preset, options=options), seed=seed)
    for component in models.components().values():
        for role, layer in GAIN_LAYERS:
            component.store(role).kernel(layer, "conv").weight.mul_(LATENT_GAIN)
    return models


@pytest.fixture
def rgb_image():
    return smooth_rgb(0, 128, 128)


@pytest.fixture
def yuv_image(rgb_image):
    return rgb_to_yuv420(rgb_image)


@pytest.fixture(scope="session")
def small_ccs_models():
    return seeded_models("ccs-y8-uv8")


@pytest.fixture(scope="session")
def small_nc_models():
    return seeded_models("nc-y8-uv8")


@pytest.fixture
def small_codec(small_ccs_models):
    return CCSCodec(small_ccs_models)


@pytest.fixture
def small_nc_codec(small_nc_models):
    return CCSCodec(small_nc_models)
