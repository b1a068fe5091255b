"""
Parameter stores for the CCS sub-networks.

A :class:`ParamStore` holds one :class:`ConvKernel` per convolution slot of a
:class:`NetworkSpec`. Stores persist to a flat binary file:

    magic "CCSW" | role tag u8 | N u32 | M u32 | seed i64 | float count u32
    | float32 little-endian values (weight then bias, slot by slot, layer order)

The float count is redundant with the network description but lets a loader reject a file
written for a different topology before reading any values.
"""

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Tuple, Union

import numpy as np
import torch

from ..tensor import DTYPE, ConvKernel
from ..utils.errors import ConfigError, FormatError
from .specs import NetworkSpec, Role, layer_kernels

logger = logging.getLogger(__name__)

MAGIC = b"CCSW"
_HEADER = struct.Struct("<4sBIIqI")

ROLE_TAGS = {
    Role.ENCODER: 1,
    Role.DECODER: 2,
    Role.HYPER_ENC: 3,
    Role.HYPER_DEC: 4,
    Role.CONTEXT: 5,
    Role.GATHER: 6,
}
PRIOR_TAG = 7


@dataclass
class ParamStore:
    """Weights of one sub-network, keyed by layer index then slot name."""
    role: Role
    n: int
    m: int
    seed: int
    kernels: Dict[int, Dict[str, ConvKernel]] = field(default_factory=dict)

    def kernel(self, layer_index: int, slot: str) -> ConvKernel:
        try:
            return self.kernels[layer_index][slot]
        except KeyError:
            raise ConfigError(f"{self.role.value}: no kernel '{slot}' for layer {layer_index}") from None

    def items(self) -> Iterator[Tuple[int, str, ConvKernel]]:
        for index in sorted(self.kernels):
            for name, kernel in self.kernels[index].items():
                yield index, name, kernel

    def parameters(self) -> List[torch.Tensor]:
        """Weight and bias tensors in persistence order."""
        params = []
        for _, _, kernel in self.items():
            params.extend([kernel.weight, kernel.bias])
        return params

    @property
    def num_params(self) -> int:
        return sum(kernel.num_params for _, _, kernel in self.items())

    def requires_grad_(self, flag: bool = True) -> "ParamStore":
        for p in self.parameters():
            p.requires_grad_(flag)
        return self

    def clone(self) -> "ParamStore":
        kernels = {
            index: {name: ConvKernel(k.weight.detach().clone(), k.bias.detach().clone()) for name, k in slots.items()}
            for index, slots in self.kernels.items()
        }
        return ParamStore(self.role, self.n, self.m, self.seed, kernels)

    def flat(self) -> np.ndarray:
        """All values as one float64 vector in persistence order."""
        if not self.kernels:
            return np.zeros(0)
        return np.concatenate([p.detach().reshape(-1).numpy() for p in self.parameters()])

    def matches(self, spec: NetworkSpec) -> bool:
        return self.role is spec.role and self.n == spec.n and self.m == spec.m and self.num_params == spec.num_params


def init_params(spec: NetworkSpec, seed: int) -> ParamStore:
    """
    Create deterministic parameters for a network.

    Weights are drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)) with a seeded
    generator and rounded to float32 so a fresh store survives persistence
    unchanged; biases are zero.

    Args:
        spec: Network description
        seed: Generator seed

    Returns:
        ParamStore
    """
    generator = torch.Generator().manual_seed(int(seed))
    store = ParamStore(role=spec.role, n=spec.n, m=spec.m, seed=int(seed))

    for index, layer in enumerate(spec.layers):
        slots = layer_kernels(layer)
        if not slots:
            continue
        store.kernels[index] = {}
        for slot in slots:
            shape = (slot.out_channels, slot.in_channels, slot.kernel, slot.kernel)
            bound = 1.0 / np.sqrt(slot.in_channels * slot.kernel * slot.kernel)
            weight = (torch.rand(shape, generator=generator, dtype=DTYPE) * 2.0 - 1.0) * bound
            store.kernels[index][slot.name] = ConvKernel(
                weight=weight.float().to(DTYPE),
                bias=torch.zeros(slot.out_channels, dtype=DTYPE),
            )

    logger.debug(f"Initialized {spec.role.value} N={spec.n} M={spec.m}: {store.num_params} parameters")
    return store


def zero_params(spec: NetworkSpec) -> ParamStore:
    """A store whose every weight and bias is zero."""
    store = ParamStore(role=spec.role, n=spec.n, m=spec.m, seed=0)
    for index, layer in enumerate(spec.layers):
        slots = layer_kernels(layer)
        if slots:
            store.kernels[index] = {
                s.name: ConvKernel.zeros(s.out_channels, s.in_channels, s.kernel, s.kernel) for s in slots
            }
    return store


def write_weights_file(path: Union[str, Path], tag: int, n: int, m: int, seed: int, values: np.ndarray):
    """Write a header and float32 payload."""
    values = np.asarray(values, dtype="<f4").reshape(-1)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, tag, n, m, seed, values.size))
        f.write(values.tobytes())


def read_weights_file(path: Union[str, Path]) -> Tuple[int, int, int, int, np.ndarray]:
    """Read a weights file; returns (tag, N, M, seed, float64 values)."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated weights header")
    magic, tag, n, m, seed, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    payload = data[_HEADER.size:]
    if len(payload) != 4 * count:
        raise FormatError(f"{path}: expected {count} floats, found {len(payload) // 4}")
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return tag, n, m, seed, values


def save_store(store: ParamStore, path: Union[str, Path]):
    write_weights_file(path, ROLE_TAGS[store.role], store.n, store.m, store.seed, store.flat())
    logger.debug(f"Saved {store.role.value} weights to {path}")


def load_store(path: Union[str, Path], spec: NetworkSpec) -> ParamStore:
    """
    Load a store written by :func:`save_store`.

    Args:
        path: Weights file
        spec: The network the file must describe

    Returns:
        ParamStore
    """
    tag, n, m, seed, values = read_weights_file(path)
    if tag != ROLE_TAGS[spec.role]:
        raise FormatError(f"{path}: role tag {tag} does not match {spec.role.value}")
    if (n, m) != (spec.n, spec.m):
        raise FormatError(f"{path}: stored N={n} M={m}, expected N={spec.n} M={spec.m}")
    if values.size != spec.num_params:
        raise FormatError(f"{path}: stored {values.size} values, network has {spec.num_params}")

    store = ParamStore(role=spec.role, n=n, m=m, seed=seed)
    offset = 0
    for index, layer in enumerate(spec.layers):
        slots = layer_kernels(layer)
        if not slots:
            continue
        store.kernels[index] = {}
        for slot in slots:
            shape = (slot.out_channels, slot.in_channels, slot.kernel, slot.kernel)
            size = int(np.prod(shape))
            weight = torch.from_numpy(values[offset:offset + size].copy()).reshape(shape)
            offset += size
            bias = torch.from_numpy(values[offset:offset + slot.out_channels].copy())
            offset += slot.out_channels
            store.kernels[index][slot.name] = ConvKernel(weight=weight, bias=bias)
    return store
