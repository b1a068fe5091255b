"""
Micro-scale training of the CCS networks.

- data: Synthetic correlated YUV420 patches
- trainer: Rate-distortion loss, gradients, gradient check and Adam training
- experiments: The CCS-vs-NC conditioning experiment
"""

from .data import SynthDataset, chroma_correlation, synth_dataset
from .experiments import (
    ConditioningExperiment,
    ConditioningResult,
    bracket_lambdas,
    compare_ccs_nc,
    rate_at_distortion,
)
from .trainer import (
    ConditionMonitor,
    MicroConfig,
    MicroTrainer,
    RDOutput,
    TrainState,
    backward,
    finite_difference_check,
    grad_check,
    rd_forward,
    rd_loss,
    train_micro,
)

__all__ = [
    "SynthDataset",
    "synth_dataset",
    "chroma_correlation",
    "MicroConfig",
    "MicroTrainer",
    "TrainState",
    "RDOutput",
    "ConditionMonitor",
    "rd_loss",
    "rd_forward",
    "backward",
    "finite_difference_check",
    "grad_check",
    "train_micro",
    "ConditioningExperiment",
    "ConditioningResult",
    "compare_ccs_nc",
    "bracket_lambdas",
    "rate_at_distortion",
]
