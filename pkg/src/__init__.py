"""
CCS: Conditional Color Separation image codec

A learned image codec that codes luma and chroma as separate components,
with the chroma component conditioned on the decoded luma.
"""

__version__ = "1.0.0"
__author__ = "CCS Codec Team"
__email__ = "codec@example.com"

# Core modules
from . import analysis, codec, color, entropy, evaluation, networks, tensor, training, utils
from .codec import CCSCodec, CCSModelSet, get_preset

__all__ = [
    # Version info
    "__version__",
    "__author__",
    "__email__",

    # Entry points
    "CCSCodec",
    "CCSModelSet",
    "get_preset",

    # Core modules
    "analysis",
    "codec",
    "color",
    "entropy",
    "evaluation",
    "networks",
    "tensor",
    "training",
    "utils",
]
