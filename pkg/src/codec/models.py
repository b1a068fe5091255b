"""
Per-component networks and the full CCS model set.

Each component (Y or UV) owns an encoder, decoder, hyper encoder, hyper
decoder, context model, gather network and a factorized hyper-latent prior.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Union

import torch

from ..entropy import FactorizedModel
from ..networks import NetworkSpec, ParamStore, Role, build_network, init_params, load_store, save_store
from ..utils.errors import ConfigError
from .config import ModelConfig

logger = logging.getLogger(__name__)

FILE_PREFIX = {
    Role.ENCODER: "enc",
    Role.DECODER: "dec",
    Role.HYPER_ENC: "henc",
    Role.HYPER_DEC: "hdec",
    Role.CONTEXT: "ctx",
    Role.GATHER: "gather",
}
PRIOR_PREFIX = "prior"
COMPONENTS = ("y", "uv")


def component_specs(n: int, in_channels: int, m: int, out_channels: int, mixtures: int = 1) -> Dict[Role, NetworkSpec]:
    return {
        Role.ENCODER: build_network(Role.ENCODER, n, in_channels=in_channels),
        Role.DECODER: build_network(Role.DECODER, n, m=m, out_channels=out_channels),
        Role.HYPER_ENC: build_network(Role.HYPER_ENC, n),
        Role.HYPER_DEC: build_network(Role.HYPER_DEC, n),
        Role.CONTEXT: build_network(Role.CONTEXT, n),
        Role.GATHER: build_network(Role.GATHER, n, mixtures=mixtures),
    }


def config_component_specs(config: ModelConfig) -> Dict[str, Dict[Role, NetworkSpec]]:
    """Network descriptions of every component of ``config``."""
    if config.rgb_baseline:
        return {"rgb": component_specs(config.n_y, 3, config.n_y, 3, config.mixtures)}
    return {
        "y": component_specs(config.n_y, 1, config.m_y, 1, config.mixtures),
        "uv": component_specs(config.n_uv, config.uv_in_channels, config.m_uv, 2, config.mixtures),
    }


@dataclass
class ComponentModel:
    """Networks, weights and prior of one colour component."""
    name: str
    specs: Dict[Role, NetworkSpec]
    params: Dict[Role, ParamStore]
    prior: FactorizedModel

    def __post_init__(self):
        for role, spec in self.specs.items():
            store = self.params.get(role)
            if store is None or not store.matches(spec):
                raise ConfigError(f"component {self.name}: weights do not match the {role.value} network")
        if self.prior.channels != self.n:
            raise ConfigError(f"component {self.name}: prior has {self.prior.channels} channels, N={self.n}")

    @property
    def n(self) -> int:
        return self.specs[Role.ENCODER].n

    @property
    def mixtures(self) -> int:
        return self.specs[Role.GATHER].mixtures

    def spec(self, role: Role) -> NetworkSpec:
        return self.specs[role]

    def store(self, role: Role) -> ParamStore:
        return self.params[role]

    def parameters(self) -> List[torch.Tensor]:
        params = []
        for role in FILE_PREFIX:
            params.extend(self.params[role].parameters())
        params.extend(self.prior.parameters())
        return params

    @property
    def num_params(self) -> int:
        return sum(store.num_params for store in self.params.values())

    def requires_grad_(self, flag: bool = True) -> "ComponentModel":
        for store in self.params.values():
            store.requires_grad_(flag)
        self.prior.requires_grad_(flag)
        return self

    @classmethod
    def random(cls, name: str, specs: Dict[Role, NetworkSpec], seed: int, prior_support: int = 64) -> "ComponentModel":
        params = {role: init_params(spec, seed * 16 + i) for i, (role, spec) in enumerate(specs.items())}
        return cls(name, specs, params, FactorizedModel(specs[Role.ENCODER].n, prior_support))

    def save(self, directory: Path):
        for role, prefix in FILE_PREFIX.items():
            save_store(self.params[role], directory / f"{prefix}_{self.name}.bin")
        self.prior.save(directory / f"{PRIOR_PREFIX}_{self.name}.bin")

    @classmethod
    def load(cls, name: str, specs: Dict[Role, NetworkSpec], directory: Path) -> "ComponentModel":
        params = {}
        for role, prefix in FILE_PREFIX.items():
            path = directory / f"{prefix}_{name}.bin"
            if not path.exists():
                raise ConfigError(f"missing weights file {path}")
            params[role] = load_store(path, specs[role])
        prior_path = directory / f"{PRIOR_PREFIX}_{name}.bin"
        if not prior_path.exists():
            raise ConfigError(f"missing weights file {prior_path}")
        return cls(name, specs, params, FactorizedModel.load(prior_path, specs[Role.ENCODER].n))


@dataclass
class CCSModelSet:
    """The Y and UV component models of one configuration."""
    config: ModelConfig
    y: ComponentModel
    uv: ComponentModel
    seed: int = field(default=0)

    def __post_init__(self):
        if self.config.rgb_baseline:
            raise ConfigError("baseline-192 is an analysis-only configuration and cannot be run")

    def components(self) -> Dict[str, ComponentModel]:
        return {"y": self.y, "uv": self.uv}

    def parameters(self) -> List[torch.Tensor]:
        return self.y.parameters() + self.uv.parameters()

    def requires_grad_(self, flag: bool = True) -> "CCSModelSet":
        self.y.requires_grad_(flag)
        self.uv.requires_grad_(flag)
        return self

    @classmethod
    def random(cls, config: ModelConfig, seed: int = 0) -> "CCSModelSet":
        """Seeded random weights; meaningful for analysis and pipeline checks only."""
        if config.rgb_baseline:
            raise ConfigError("baseline-192 is an analysis-only configuration and cannot be run")
        specs = config_component_specs(config)
        models = cls(
            config=config,
            y=ComponentModel.random("y", specs["y"], 2 * seed, config.prior_support),
            uv=ComponentModel.random("uv", specs["uv"], 2 * seed + 1, config.prior_support),
            seed=seed,
        )
        logger.debug(f"Random {config.name} weights, seed {seed}")
        return models

    @classmethod
    def load(cls, config: ModelConfig, directory: Union[str, Path]) -> "CCSModelSet":
        directory = Path(directory)
        if not directory.is_dir():
            raise ConfigError(f"weights directory {directory} does not exist")
        specs = config_component_specs(config)
        models = cls(
            config=config,
            y=ComponentModel.load("y", specs["y"], directory),
            uv=ComponentModel.load("uv", specs["uv"], directory),
        )
        logger.info(f"Loaded {config.name} weights from {directory}")
        return models

    def save(self, directory: Union[str, Path]):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.y.save(directory)
        self.uv.save(directory)
        logger.info(f"Saved {self.config.name} weights to {directory}")
