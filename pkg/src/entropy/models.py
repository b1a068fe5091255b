"""
Entropy models: quantization, the conditional Gaussian (mixture) model driven
by the gather network, and the factorized prior of the hyper-latents.

Likelihoods are torch functions so the trainer can differentiate the rate
term; the coding tables in :mod:`.tables` evaluate the same distributions.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import torch
import torch.nn.functional as F

from ..networks import NetworkSpec, ParamStore, forward
from ..networks.params import PRIOR_TAG, read_weights_file, write_weights_file
from ..tensor import DTYPE, concat_channels
from ..utils.errors import ConfigError, FormatError, ShapeError

logger = logging.getLogger(__name__)

SIGMA_FLOOR = 0.04
PROB_FLOOR = 2.0 ** -16
LATENT_BOUND = 255


def quantize_latent(x: torch.Tensor, mode: str = "round", seed: Optional[int] = None) -> torch.Tensor:
    """
    Quantize a latent.

    Args:
        x: Latent tensor
        mode: "round" (nearest integer, ties to even) or "noise" (additive U[-0.5, 0.5))
        seed: Noise generator seed (noise mode)

    Returns:
        Quantized (or noise-relaxed) tensor
    """
    if mode == "round":
        return torch.round(x)
    if mode == "noise":
        generator = torch.Generator()
        generator.manual_seed(0 if seed is None else int(seed))
        u = torch.rand(x.shape, generator=generator, dtype=x.dtype) - 0.5
        return x + u
    raise ConfigError(f"unknown quantization mode {mode!r}")


def clamp_latent(x: torch.Tensor) -> torch.Tensor:
    return torch.clamp(x, -LATENT_BOUND, LATENT_BOUND)


def soft_floor(x: torch.Tensor, floor: float) -> torch.Tensor:
    """
    Smooth lower bound: ``floor + floor * softplus((x - floor) / floor)``.

    Always above ``floor``, equal to ``x`` once ``x`` exceeds the floor by a
    few multiples of it, and infinitely differentiable everywhere.
    """
    return floor + floor * F.softplus((x - floor) / floor)


def smoothstep(t: torch.Tensor) -> torch.Tensor:
    """Quintic ramp on [0, 1] with zero first and second derivatives at both ends."""
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def _bin_mass(v: torch.Tensor, mu: torch.Tensor, sigma: torch.Tensor) -> torch.Tensor:
    upper = torch.special.ndtr((v + 0.5 - mu) / sigma)
    lower = torch.special.ndtr((v - 0.5 - mu) / sigma)
    return upper - lower


def gaussian_bin_likelihood(v, mu, sigma) -> torch.Tensor:
    """Probability of the unit bin around ``v`` under N(mu, sigma^2), floored at 2^-16."""
    v, mu, sigma = (torch.as_tensor(a, dtype=DTYPE) for a in (v, mu, sigma))
    if torch.any(sigma < SIGMA_FLOOR):
        raise ShapeError(f"sigma below floor {SIGMA_FLOOR}")
    return soft_floor(_bin_mass(v, mu, sigma), PROB_FLOOR)


def mixture_bin_likelihood(v: torch.Tensor, mu: torch.Tensor, sigma: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """Bin probability under a Gaussian mixture; ``mu``, ``sigma``, ``weights`` carry K on the last axis."""
    mass = (weights * _bin_mass(v.unsqueeze(-1), mu, sigma)).sum(dim=-1)
    return soft_floor(mass, PROB_FLOOR)


@dataclass
class GaussianField:
    """Per-element mixture parameters; every tensor is latent shape + (K,)."""
    mu: torch.Tensor
    sigma: torch.Tensor
    weights: torch.Tensor

    @property
    def mixtures(self) -> int:
        return self.mu.shape[-1]

    def likelihood(self, v: torch.Tensor) -> torch.Tensor:
        return mixture_bin_likelihood(v, self.mu, self.sigma, self.weights)


def split_gather_output(out: torch.Tensor, n: int, mixtures: int = 1) -> GaussianField:
    """
    Interpret 3*K*N gather channels as a mixture field.

    Channels [0, KN) are means, [KN, 2KN) raw scales, [2KN, 3KN) weight
    logits; within each group channel ``k*N + c`` belongs to latent channel
    ``c`` and component ``k``.
    """
    if out.shape[-1] != 3 * mixtures * n:
        raise ShapeError(f"gather output has {out.shape[-1]} channels, expected {3 * mixtures * n}")

    def group(i):
        g = out[..., i * mixtures * n:(i + 1) * mixtures * n]
        return g.reshape(*g.shape[:-1], mixtures, n).transpose(-1, -2)

    mu = group(0)
    sigma = soft_floor(F.softplus(group(1)), SIGMA_FLOOR)
    weights = torch.softmax(group(2), dim=-1)
    return GaussianField(mu=mu, sigma=sigma, weights=weights)


def gather_params(
    hyper_out: torch.Tensor,
    context_out: torch.Tensor,
    spec: NetworkSpec,
    params: ParamStore,
) -> GaussianField:
    """
    Fuse hyper-decoder and context outputs into a Gaussian field.

    Args:
        hyper_out: Hyper-decoder output, 2N channels
        context_out: Context-model output, 2N channels
        spec: Gather network
        params: Gather weights

    Returns:
        GaussianField over the N latent channels
    """
    if hyper_out.shape[:-1] != context_out.shape[:-1]:
        raise ShapeError(
            f"gather: spatial mismatch {tuple(hyper_out.shape[:-1])} vs {tuple(context_out.shape[:-1])}"
        )
    out = forward(spec, params, concat_channels(hyper_out, context_out))
    return split_gather_output(out, spec.n, spec.mixtures)


class FactorizedModel:
    """
    Per-channel distribution of the hyper-latents over integers [-S, S].

    The CDF passes through knots at half-integers, so integer bins get
    exactly the softmax mass of their logit. Between knots it follows the
    quintic smoothstep ``6t^5 - 15t^4 + 10t^3``: monotone, and twice
    differentiable across knots and at the support edges, so relaxed (noisy)
    values see a smooth likelihood.
    """

    def __init__(self, channels: int, support: int = 64, logits: Optional[torch.Tensor] = None):
        if channels <= 0 or support <= 0:
            raise ShapeError(f"factorized model needs positive channels and support, got {channels}, {support}")
        self.channels = channels
        self.support = support
        if logits is None:
            logits = torch.zeros(channels, 2 * support + 1, dtype=DTYPE)
        if tuple(logits.shape) != (channels, 2 * support + 1):
            raise ShapeError(f"logits shape {tuple(logits.shape)} != {(channels, 2 * support + 1)}")
        self.logits = logits

    @property
    def num_bins(self) -> int:
        return 2 * self.support + 1

    @property
    def num_params(self) -> int:
        return self.logits.numel()

    def pmf(self) -> torch.Tensor:
        return torch.softmax(self.logits, dim=-1)

    def knots(self) -> torch.Tensor:
        """CDF values at -S-0.5, -S+0.5, ..., S+0.5 for every channel."""
        zero = torch.zeros(self.channels, 1, dtype=self.logits.dtype)
        return torch.cat([zero, torch.cumsum(self.pmf(), dim=-1)], dim=-1)

    def cdf(self, x: torch.Tensor) -> torch.Tensor:
        """Interpolated CDF; ``x`` has channels on its last axis."""
        knots = self.knots()
        pos = x + self.support + 0.5
        index = torch.clamp(torch.floor(pos), 0, self.num_bins - 1).long()
        frac = torch.clamp(pos - index.to(pos.dtype), 0.0, 1.0)

        flat_index = index.reshape(-1, self.channels).transpose(0, 1)
        lo = torch.gather(knots, 1, flat_index)
        hi = torch.gather(knots, 1, flat_index + 1)
        lo = lo.transpose(0, 1).reshape(x.shape)
        hi = hi.transpose(0, 1).reshape(x.shape)
        return lo + smoothstep(frac) * (hi - lo)

    def likelihood(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] != self.channels:
            raise ShapeError(f"factorized model has {self.channels} channels, input has {x.shape[-1]}")
        return soft_floor(self.cdf(x + 0.5) - self.cdf(x - 0.5), PROB_FLOOR)

    def requires_grad_(self, flag: bool = True) -> "FactorizedModel":
        self.logits.requires_grad_(flag)
        return self

    def parameters(self):
        return [self.logits]

    def clone(self) -> "FactorizedModel":
        return FactorizedModel(self.channels, self.support, self.logits.detach().clone())

    def save(self, path):
        write_weights_file(path, PRIOR_TAG, self.channels, self.support, 0, self.logits.detach().numpy())

    @classmethod
    def load(cls, path, channels: Optional[int] = None) -> "FactorizedModel":
        tag, n, support, _, values = read_weights_file(path)
        if tag != PRIOR_TAG:
            raise FormatError(f"{path}: not a factorized prior file (role tag {tag})")
        if channels is not None and n != channels:
            raise FormatError(f"{path}: prior has {n} channels, expected {channels}")
        if values.size != n * (2 * support + 1):
            raise FormatError(f"{path}: prior payload size {values.size} does not match {n}x{2 * support + 1}")
        return cls(n, support, torch.from_numpy(values.reshape(n, 2 * support + 1).copy()))


def factorized_likelihood(v: Union[int, float], model: FactorizedModel, channel: int) -> float:
    """Probability of integer ``v`` in one channel of ``model``, floored at 2^-16."""
    if not 0 <= channel < model.channels:
        raise ShapeError(f"channel {channel} outside [0, {model.channels})")
    x = torch.zeros(model.channels, dtype=DTYPE)
    x[channel] = float(v)
    return float(model.likelihood(x)[channel])


class ScaleTable:
    """Log-spaced sigma levels; a sigma maps to the nearest level not below it."""

    def __init__(self, levels: int = 64, lo: float = 0.11, hi: float = 256.0):
        self.levels = np.exp(np.linspace(math.log(lo), math.log(hi), levels))

    def __len__(self) -> int:
        return self.levels.size

    def index(self, sigma) -> np.ndarray:
        idx = np.searchsorted(self.levels, np.asarray(sigma, dtype=np.float64), side="left")
        return np.minimum(idx, self.levels.size - 1)

    def snap(self, sigma) -> np.ndarray:
        return self.levels[self.index(sigma)]


def rate_bits(probs: torch.Tensor) -> torch.Tensor:
    """Differentiable -sum(log2 p); the trainer's rate term."""
    return -torch.log2(probs).sum()


def rate_estimate(latent, probs) -> float:
    """
    Bits needed to code ``latent`` given per-element probabilities.

    ``probs`` may hold one probability per element or more (an escape symbol
    is followed by its raw value); the estimate is -sum(log2 p).
    """
    p = torch.as_tensor(probs, dtype=DTYPE).detach().reshape(-1)
    count = latent.numel() if isinstance(latent, torch.Tensor) else int(np.size(latent))
    if p.numel() < count:
        raise ShapeError(f"{p.numel()} probabilities for {count} latent elements")
    if p.numel() and (torch.any(p <= 0) or torch.any(p > 1)):
        raise ShapeError("probabilities must lie in (0, 1]")
    return float(rate_bits(p))
