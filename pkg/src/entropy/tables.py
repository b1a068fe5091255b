"""
Coding tables derived from the entropy models.

Every latent element is coded against a window of integer bins plus one
escape bin holding the tail mass. An escaped element is followed by its raw
value coded with a uniform table over the clamped latent range.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
from scipy.special import ndtr

from ..utils.errors import EntropyCodingError
from .cdf import TOTAL, cdf_rows, quantize_frequencies, uniform_table
from .models import LATENT_BOUND, FactorizedModel, ScaleTable
from .range_coder import RangeDecoder, RangeEncoder

logger = logging.getLogger(__name__)

TAIL = 8.0
RAW_TABLE = uniform_table(2 * LATENT_BOUND + 1, offset=-LATENT_BOUND)
MAX_WIDTH = 2 * LATENT_BOUND + 1


@dataclass
class TableSet:
    """
    Tables for a group of latent elements coded in sequence.

    Row ``i`` covers values ``lo[i] .. lo[i] + width_i - 1`` followed by the
    escape bin; ``cdfs[i]`` is its cumulative array.
    """
    lo: np.ndarray
    cdfs: List[np.ndarray]

    def __len__(self) -> int:
        return len(self.cdfs)

    def width(self, i: int) -> int:
        return self.cdfs[i].size - 2


def _pmf_with_escape(mass: np.ndarray) -> np.ndarray:
    mass = np.clip(mass, 0.0, 1.0)
    total = mass.sum(axis=-1, keepdims=True)
    mass = np.where(total > 1.0, mass / total, mass)
    escape = np.clip(1.0 - mass.sum(axis=-1, keepdims=True), 0.0, 1.0)
    return np.concatenate([mass, escape], axis=-1)


def gaussian_tables(mu: np.ndarray, sigma: np.ndarray, weights: np.ndarray, tail: float = TAIL) -> TableSet:
    """
    Tables for elements with mixture parameters of shape (count, K).

    All rows of one call share a window width wide enough for the widest
    ``mu +/- tail * sigma`` span, clamped to the latent range.
    """
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if mu.ndim == 1:
        mu, sigma, weights = mu[:, None], sigma[:, None], weights[:, None]

    lo = np.floor((mu - tail * sigma).min(axis=-1))
    hi = np.ceil((mu + tail * sigma).max(axis=-1))
    lo = np.clip(lo, -LATENT_BOUND, LATENT_BOUND).astype(np.int64)
    hi = np.clip(hi, -LATENT_BOUND, LATENT_BOUND).astype(np.int64)
    width = int(min((hi - lo).max() + 1, MAX_WIDTH))
    lo = np.minimum(lo, LATENT_BOUND - width + 1)

    v = (lo[:, None] + np.arange(width)[None, :]).astype(np.float64)[..., None]
    upper = ndtr((v + 0.5 - mu[:, None, :]) / sigma[:, None, :])
    lower = ndtr((v - 0.5 - mu[:, None, :]) / sigma[:, None, :])
    mass = ((upper - lower) * weights[:, None, :]).sum(axis=-1)

    freq = quantize_frequencies(_pmf_with_escape(mass))
    return TableSet(lo=lo, cdfs=list(cdf_rows(freq)))


def factorized_tables(model: FactorizedModel) -> TableSet:
    """One row per channel over [-S, S] plus escape."""
    pmf = model.pmf().detach().numpy()
    freq = quantize_frequencies(_pmf_with_escape(pmf))
    return TableSet(lo=np.full(model.channels, -model.support, dtype=np.int64), cdfs=list(cdf_rows(freq)))


class ScaleTableCache:
    """
    Zero-mean tables for every level of a :class:`ScaleTable`.

    Elements are coded as ``v - round(mu)`` against the table of the smallest
    level not below their sigma.
    """

    def __init__(self, scale_table: Optional[ScaleTable] = None, tail: float = TAIL):
        self.scale_table = scale_table or ScaleTable()
        self._rows: Dict[int, np.ndarray] = {}
        self._lo: Dict[int, int] = {}
        for level, s in enumerate(self.scale_table.levels):
            half = int(min(np.ceil(tail * s), LATENT_BOUND))
            v = np.arange(-half, half + 1, dtype=np.float64)
            mass = ndtr((v + 0.5) / s) - ndtr((v - 0.5) / s)
            freq = quantize_frequencies(_pmf_with_escape(mass[None, :]))
            self._rows[level] = cdf_rows(freq)[0]
            self._lo[level] = -half
        logger.debug(f"Built {len(self.scale_table)} scale-table entries")

    def tables(self, mu: np.ndarray, sigma: np.ndarray) -> TableSet:
        """One zero-mean table per element; ``mu`` and ``sigma`` are (N,) or (N, 1)."""
        mu = np.asarray(mu, dtype=np.float64).reshape(len(mu), -1)
        sigma = np.asarray(sigma, dtype=np.float64).reshape(len(sigma), -1)
        if mu.shape != sigma.shape:
            raise EntropyCodingError(f"mu {mu.shape} and sigma {sigma.shape} disagree")
        if mu.shape[1] != 1:
            raise EntropyCodingError(f"scale tables code single Gaussians, got {mu.shape[1]} mixture components")
        mu, sigma = mu[:, 0], sigma[:, 0]
        levels = self.scale_table.index(sigma)
        centre = np.rint(mu).astype(np.int64)
        lo = np.array([centre[i] + self._lo[int(l)] for i, l in enumerate(levels)], dtype=np.int64)
        return TableSet(lo=lo, cdfs=[self._rows[int(l)] for l in levels])


def encode_values(encoder: RangeEncoder, values, tables: TableSet) -> List[float]:
    """
    Code one value per table row.

    Returns:
        Table probabilities of every coded symbol (escapes contribute two)
    """
    values = np.asarray(values).reshape(-1)
    if values.size != len(tables):
        raise EntropyCodingError(f"{values.size} values for {len(tables)} tables")
    probs = []
    for i, value in enumerate(values):
        value = int(value)
        if abs(value) > LATENT_BOUND:
            raise EntropyCodingError(f"latent value {value} outside [-{LATENT_BOUND}, {LATENT_BOUND}]")
        cdf = tables.cdfs[i]
        width = cdf.size - 2
        index = value - int(tables.lo[i])
        if not 0 <= index < width:
            index = width
        start, stop = int(cdf[index]), int(cdf[index + 1])
        encoder.encode_interval(start, stop - start)
        probs.append((stop - start) / TOTAL)
        if index == width:
            encoder.encode(value, RAW_TABLE)
            probs.append(RAW_TABLE.probability(value))
    return probs


def decode_values(decoder: RangeDecoder, tables: TableSet) -> np.ndarray:
    out = np.empty(len(tables), dtype=np.int64)
    for i, cdf in enumerate(tables.cdfs):
        index = decoder.decode_index(cdf)
        if index == cdf.size - 2:
            out[i] = decoder.decode(RAW_TABLE)
        else:
            out[i] = int(tables.lo[i]) + index
    return out
