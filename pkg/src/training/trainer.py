"""
Micro-scale rate-distortion training of the CCS networks.

The full Y/UV graph (encoders, hyperprior, context model, gather network,
decoders) is trained jointly with Adam on synthetic patches, using additive
uniform noise in place of rounding. The loss is

    L = lambda * 255^2 * D + R

with D the MSE pooled over all YUV420 samples in [0, 1] and R the estimated
bits per luma pixel.
"""

import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import torch

from .. import tensor as T
from ..codec.config import ModelConfig, lambda_index
from ..codec.models import CCSModelSet, ComponentModel
from ..entropy import gather_params, quantize_latent, rate_bits
from ..networks import Role, forward
from ..utils.errors import ConfigError, InvariantViolation, TrainingDivergedError
from ..utils.logging_utils import ExperimentLogger
from .data import SynthDataset, synth_dataset

logger = logging.getLogger(__name__)

DISTORTION_SCALE = 255.0 ** 2
MICRO_WIDTHS = (4, 8)


@dataclass
class MicroConfig:
    """Hyperparameters of a micro training run."""
    n_y: int = 8
    n_uv: int = 8
    patch: int = 16
    support: int = 16
    lam: float = 0.015
    steps: int = 2000
    lr: float = 1e-4
    betas: Tuple[float, float] = (0.9, 0.999)
    batch: int = 8
    seed: int = 0
    context: bool = True
    corr: float = 0.9
    dataset_size: int = 64
    holdout_size: int = 32
    mixtures: int = 1
    log_every: int = 100

    def __post_init__(self):
        if self.n_y not in MICRO_WIDTHS or self.n_uv not in MICRO_WIDTHS:
            raise ConfigError(f"micro channel widths must be in {MICRO_WIDTHS}, got {self.n_y}/{self.n_uv}")
        if self.patch <= 0 or self.patch % 16:
            raise ConfigError(f"patch must be a positive multiple of 16, got {self.patch}")
        if self.support <= 0:
            raise ConfigError(f"support must be positive, got {self.support}")
        lambda_index(self.lam)
        if self.steps < 0 or self.batch <= 0 or self.lr <= 0:
            raise ConfigError("steps must be >= 0, batch and lr positive")
        self.betas = tuple(float(b) for b in self.betas)

    @classmethod
    def from_dict(cls, config: Optional[Dict[str, Any]] = None) -> "MicroConfig":
        config = dict(config or {})
        known = {f.name for f in fields(cls)}
        for key in sorted(set(config) - known):
            logger.debug(f"Ignoring unknown micro-training option {key!r}")
        try:
            return cls(**{k: v for k, v in config.items() if k in known})
        except TypeError as e:
            raise ConfigError(f"invalid micro-training option: {e}") from None

    def model_config(self, conditional: bool) -> ModelConfig:
        kind = "ccs" if conditional else "nc"
        return ModelConfig(
            name=f"{kind}-y{self.n_y}-uv{self.n_uv}",
            n_y=self.n_y,
            n_uv=self.n_uv,
            conditional=conditional,
            lambda_id=lambda_index(self.lam),
            mixtures=self.mixtures,
            prior_support=self.support,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class ConditionMonitor:
    """Counts every read of luma data made on behalf of the UV path."""

    def __init__(self):
        self.reads = 0

    def read(self, x: torch.Tensor) -> torch.Tensor:
        self.reads += 1
        return T.avg_downsample2(x, ceil=True)


@dataclass
class RDOutput:
    D: torch.Tensor
    R_Y: torch.Tensor
    R_UV: torch.Tensor
    L: torch.Tensor
    D_UV: torch.Tensor

    def as_floats(self) -> Dict[str, float]:
        return {name: float(getattr(self, name).detach()) for name in ("D", "R_Y", "R_UV", "L")}


def rd_loss(lam: float, D, R, pixels: Optional[int] = None):
    """
    ``lam * 255^2 * D + R``.

    Args:
        lam: Rate-distortion trade-off
        D: MSE on [0, 1]-scaled samples
        R: Rate in bits per pixel, or total bits when ``pixels`` is given
        pixels: Optional pixel count to normalize ``R``

    Returns:
        Loss (a tensor when D or R is a tensor)
    """
    if lam < 0 or float(D) < 0 or float(R) < 0:
        raise ValueError(f"rd_loss inputs must be non-negative, got lambda={lam}, D={float(D)}, R={float(R)}")
    if pixels is not None:
        if pixels <= 0:
            raise ValueError(f"pixels must be positive, got {pixels}")
        R = R / pixels
    return lam * DISTORTION_SCALE * D + R


def component_rate(model: ComponentModel, x: torch.Tensor, mode: str, noise_seed: int,
                   context: bool = True) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Encoder, relaxed quantization and the rate of one component.

    Returns:
        (quantized latent, bits for main plus hyper latents)
    """
    y = forward(model.spec(Role.ENCODER), model.store(Role.ENCODER), x)
    y_q = quantize_latent(y, mode, seed=2 * noise_seed)
    z = forward(model.spec(Role.HYPER_ENC), model.store(Role.HYPER_ENC), y)
    z_q = quantize_latent(z, mode, seed=2 * noise_seed + 1)

    h, w = T.spatial_shape(y)
    hyper_out = T.crop(forward(model.spec(Role.HYPER_DEC), model.store(Role.HYPER_DEC), z_q), h, w)
    if context:
        ctx = forward(model.spec(Role.CONTEXT), model.store(Role.CONTEXT), y_q)
    else:
        ctx = torch.zeros_like(hyper_out)
    gaussian = gather_params(hyper_out, ctx, model.spec(Role.GATHER), model.store(Role.GATHER))

    bits = rate_bits(gaussian.likelihood(y_q)) + rate_bits(model.prior.likelihood(z_q))
    return y_q, bits


def rd_forward(
    models: CCSModelSet,
    batch: Tuple[torch.Tensor, torch.Tensor, torch.Tensor],
    lam: float,
    noise_seed: int = 0,
    context: bool = True,
    mode: str = "noise",
    monitor: Optional[ConditionMonitor] = None,
) -> RDOutput:
    """
    Rate-distortion terms of a batch.

    Args:
        models: Y and UV networks
        batch: (Y, U, V) planes in [0, 1], each (B, H, W, 1) at its own resolution
        lam: Rate-distortion trade-off
        noise_seed: Seed of the quantization noise
        context: Use the context model (zeros otherwise)
        mode: "noise" for training, "round" for evaluation
        monitor: Optional counter of luma reads by the UV path

    Returns:
        RDOutput
    """
    x_y, u, v = batch
    x_uv = torch.cat([u, v], dim=-1)
    conditional = models.config.conditional
    monitor = monitor or ConditionMonitor()

    uv_input = T.concat_channels(monitor.read(x_y), x_uv) if conditional else x_uv
    y_y, bits_y = component_rate(models.y, x_y, mode, 2 * noise_seed, context)
    y_uv, bits_uv = component_rate(models.uv, uv_input, mode, 2 * noise_seed + 1, context)

    rec_y = forward(models.y.spec(Role.DECODER), models.y.store(Role.DECODER), y_y)
    dec_uv_input = T.concat_channels(monitor.read(y_y), y_uv) if conditional else y_uv
    # A 16-pixel patch leaves an 8x8 chroma plane that decodes to 16x16.
    rec_uv = T.crop(forward(models.uv.spec(Role.DECODER), models.uv.store(Role.DECODER), dec_uv_input),
                    *T.spatial_shape(x_uv))

    err_y = ((rec_y - x_y) ** 2).sum()
    err_uv = ((rec_uv - x_uv) ** 2).sum()
    samples = x_y.numel() + x_uv.numel()
    D = (err_y + err_uv) / samples

    pixels = x_y.numel()
    R_Y = bits_y / pixels
    R_UV = bits_uv / pixels
    L = rd_loss(lam, D, R_Y + R_UV)
    return RDOutput(D=D, R_Y=R_Y, R_UV=R_UV, L=L, D_UV=err_uv / x_uv.numel())


def backward(models: CCSModelSet, batch, lam: float, noise_seed: int = 0,
             context: bool = True) -> Tuple[RDOutput, List[torch.Tensor]]:
    """Loss and its gradient with respect to every parameter (in ``models.parameters()`` order)."""
    params = models.parameters()
    for p in params:
        p.requires_grad_(True)
        p.grad = None
    out = rd_forward(models, batch, lam, noise_seed, context)
    if not torch.isfinite(out.L):
        raise TrainingDivergedError(0, "non-finite loss in backward pass")
    out.L.backward()
    grads = [p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p) for p in params]
    return out, grads


def finite_difference_check(
    loss_fn: Callable[[], torch.Tensor],
    params: Sequence[torch.Tensor],
    eps: float = 1e-4,
    samples: int = 200,
    seed: int = 0,
    floor: float = 1e-6,
    loss_fn_minus: Optional[Callable[[], torch.Tensor]] = None,
) -> float:
    """
    Compare autograd gradients with central differences.

    Args:
        loss_fn: Scalar loss of the current parameter values
        params: Leaf tensors to perturb
        eps: Finite-difference step
        samples: Number of scalar parameters sampled without replacement
        seed: Sampling seed
        floor: Lower bound of the relative-error denominator; smaller gradients are
            compared in absolute terms, below the roundoff of a float64 difference quotient
        loss_fn_minus: Loss used for the minus perturbation (defaults to ``loss_fn``)

    Returns:
        Max of |analytic - numeric| / max(|analytic|, |numeric|, floor)
    """
    params = list(params)
    for p in params:
        p.requires_grad_(True)
        p.grad = None
    loss_fn().backward()
    analytic = [p.grad.detach().reshape(-1).clone() if p.grad is not None else torch.zeros(p.numel(), dtype=p.dtype)
                for p in params]

    sizes = np.array([p.numel() for p in params])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = np.random.default_rng(seed)
    picks = rng.choice(int(offsets[-1]), size=min(samples, int(offsets[-1])), replace=False)
    minus = loss_fn_minus or loss_fn

    worst = 0.0
    with torch.no_grad():
        for flat in picks:
            k = int(np.searchsorted(offsets, flat, side="right")) - 1
            i = int(flat - offsets[k])
            view = params[k].view(-1)
            original = view[i].item()
            view[i] = original + eps
            plus_loss = float(loss_fn())
            view[i] = original - eps
            minus_loss = float(minus())
            view[i] = original

            numeric = (plus_loss - minus_loss) / (2.0 * eps)
            a = float(analytic[k][i])
            error = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, error)
    return worst


def grad_check(
    models: CCSModelSet,
    batch,
    lam: float = 0.015,
    eps: float = 1e-4,
    samples: int = 200,
    seed: int = 0,
    noise_seed: int = 0,
    context: bool = False,
    mismatched_seeds: bool = False,
) -> float:
    """
    Finite-difference check of the full rate-distortion gradient.

    The quantization noise is fixed across the two evaluations of every
    parameter; ``mismatched_seeds`` breaks that on purpose. Leaky ReLUs keep
    the sign pattern of the unperturbed pass, so a step of ``eps`` never
    crosses an activation kink.
    """
    pattern = T.ActivationPattern()

    def loss(seed_value=noise_seed):
        pattern.rewind()
        return rd_forward(models, batch, lam, seed_value, context).L

    minus = (lambda: loss(noise_seed + 1)) if mismatched_seeds else None
    with T.frozen_activations(pattern):
        error = finite_difference_check(loss, models.parameters(), eps, samples, seed, loss_fn_minus=minus)
    logger.info(f"Gradient check over {samples} parameters: max relative error {error:.3e}")
    return error


@dataclass
class TrainState:
    """Models, optimizer and loss history of a training run."""
    models: CCSModelSet
    optimizer: torch.optim.Optimizer
    step: int = 0
    history: List[Dict[str, float]] = field(default_factory=list)
    monitor: ConditionMonitor = field(default_factory=ConditionMonitor)

    @property
    def uv_condition_reads(self) -> int:
        return self.monitor.reads

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.history, columns=["step", "D", "R_Y", "R_UV", "L"])

    def save_history_csv(self, path: Union[str, Path]):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        self.history_frame().to_csv(path, index=False)

    def save_checkpoint(self, directory: Union[str, Path]):
        self.models.save(directory)

    def smoothed_loss(self, window: int = 100) -> np.ndarray:
        return self.history_frame()["L"].rolling(window, min_periods=1).mean().to_numpy()


class MicroTrainer:
    """Adam training of a micro CCS (or NC) model on synthetic patches."""

    def __init__(self, config: MicroConfig, conditional: bool = True,
                 dataset: Optional[SynthDataset] = None, exp_logger: Optional[ExperimentLogger] = None):
        self.config = config
        self.conditional = conditional
        self.logger = logging.getLogger(self.__class__.__name__)
        self.exp_logger = exp_logger

        self.dataset = dataset or synth_dataset(config.seed, config.dataset_size, config.corr, config.patch)
        if self.dataset.patch != config.patch:
            raise ConfigError(f"dataset patch {self.dataset.patch} differs from configured {config.patch}")

        models = CCSModelSet.random(config.model_config(conditional), seed=config.seed).requires_grad_(True)
        optimizer = torch.optim.Adam(models.parameters(), lr=config.lr, betas=config.betas)
        self.state = TrainState(models=models, optimizer=optimizer)
        self._rng = np.random.default_rng(config.seed)

        self.logger.info(f"Initialized micro trainer: {models.config.name}, lambda={config.lam}, "
                         f"{sum(p.numel() for p in models.parameters())} parameters")

    def _noise_seed(self, step: int) -> int:
        return self.config.seed * 1_000_003 + step

    def train_step(self) -> Dict[str, float]:
        cfg, state = self.config, self.state
        batch_size = min(cfg.batch, len(self.dataset))
        indices = self._rng.choice(len(self.dataset), size=batch_size, replace=False)

        try:
            out = rd_forward(state.models, self.dataset.batch(indices), cfg.lam, self._noise_seed(state.step),
                             cfg.context, monitor=state.monitor)
        except InvariantViolation as e:
            raise TrainingDivergedError(state.step, f"step {state.step}: {e}") from e
        if not math.isfinite(float(out.L.detach())):
            raise TrainingDivergedError(state.step)

        state.optimizer.zero_grad()
        out.L.backward()
        state.optimizer.step()

        record = {"step": state.step, **out.as_floats()}
        state.history.append(record)
        state.step += 1
        return record

    def train(self, steps: Optional[int] = None) -> TrainState:
        steps = self.config.steps if steps is None else steps
        for _ in range(steps):
            record = self.train_step()
            if self.config.log_every and record["step"] % self.config.log_every == 0:
                self.logger.debug(f"step {record['step']}: L={record['L']:.5f} D={record['D']:.6f} "
                                  f"R_Y={record['R_Y']:.4f} R_UV={record['R_UV']:.4f}")
                if self.exp_logger is not None:
                    self.exp_logger.log_step(record["step"], record)
        return self.state

    def evaluate(self, dataset: SynthDataset) -> Dict[str, float]:
        """Hard-rounded rate and distortion on held-out patches."""
        with torch.no_grad():
            out = rd_forward(self.state.models, dataset.batch(range(len(dataset))), self.config.lam,
                             context=self.config.context, mode="round")
        return {**out.as_floats(), "D_UV": float(out.D_UV)}

    def get_stats(self) -> Dict[str, Any]:
        last = self.state.history[-1] if self.state.history else {}
        return {"step": self.state.step, "uv_condition_reads": self.state.uv_condition_reads, **last}


def train_micro(cfg: MicroConfig, conditional: bool = True, dataset: Optional[SynthDataset] = None,
                exp_logger: Optional[ExperimentLogger] = None) -> TrainState:
    """
    Train a micro model.

    Args:
        cfg: Training configuration
        conditional: CCS (True) or NC (False) wiring
        dataset: Training patches (generated from ``cfg`` when omitted)
        exp_logger: Optional experiment logger receiving periodic step records

    Returns:
        TrainState after ``cfg.steps`` steps
    """
    return MicroTrainer(cfg, conditional, dataset, exp_logger).train()
