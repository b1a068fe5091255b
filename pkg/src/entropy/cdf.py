"""
Quantized cumulative-frequency tables for the range coder.
"""

from dataclasses import dataclass

import numpy as np

from ..utils.errors import EntropyCodingError

PRECISION = 16
TOTAL = 1 << PRECISION


@dataclass(frozen=True)
class CdfTable:
    """
    Cumulative frequencies of one coding distribution.

    ``cdf`` has one more entry than there are symbols, starts at 0 and ends at
    ``TOTAL``. Symbol ``s`` occupies ``[cdf[s - offset], cdf[s - offset + 1])``.
    """
    cdf: np.ndarray
    offset: int = 0

    def __post_init__(self):
        cdf = np.asarray(self.cdf, dtype=np.int64)
        if cdf.ndim != 1 or cdf.size < 2:
            raise EntropyCodingError("CDF table needs at least one symbol")
        if cdf.size > TOTAL:
            raise EntropyCodingError(f"CDF table has {cdf.size - 1} symbols, limit is {TOTAL - 1}")
        if cdf[0] != 0 or cdf[-1] != TOTAL:
            raise EntropyCodingError(f"CDF must run from 0 to {TOTAL}, got {cdf[0]}..{cdf[-1]}")
        if np.any(np.diff(cdf) < 1):
            raise EntropyCodingError("CDF table has a zero-frequency symbol")
        object.__setattr__(self, "cdf", cdf)

    @property
    def num_symbols(self) -> int:
        return self.cdf.size - 1

    def frequencies(self) -> np.ndarray:
        return np.diff(self.cdf)

    def probability(self, symbol: int) -> float:
        i = symbol - self.offset
        return float(self.cdf[i + 1] - self.cdf[i]) / TOTAL

    def contains(self, symbol: int) -> bool:
        return 0 <= symbol - self.offset < self.num_symbols


def quantize_frequencies(pmf: np.ndarray) -> np.ndarray:
    """
    Integer frequencies summing to ``TOTAL`` with every bin at least 1.

    Accepts a single pmf or a 2-D array of pmfs (one per row).
    """
    pmf = np.asarray(pmf, dtype=np.float64)
    single = pmf.ndim == 1
    rows = np.atleast_2d(pmf)
    if rows.shape[-1] == 0:
        raise EntropyCodingError("cannot quantize an empty pmf")
    if rows.shape[-1] > TOTAL - 1:
        raise EntropyCodingError(f"pmf has {rows.shape[-1]} bins, limit is {TOTAL - 1}")
    if np.any(rows < 0) or not np.all(np.isfinite(rows)):
        raise EntropyCodingError("pmf must be finite and non-negative")
    if np.any(rows.sum(axis=-1) > 1.0 + 1e-9):
        raise EntropyCodingError("pmf sums to more than 1")

    freq = np.maximum(np.rint(rows * TOTAL).astype(np.int64), 1)
    deficit = TOTAL - freq.sum(axis=-1)
    largest = freq.argmax(axis=-1)
    index = np.arange(freq.shape[0])
    freq[index, largest] += deficit

    # Rare: the largest bin could not absorb the excess on its own.
    for row in np.nonzero(freq[index, largest] < 1)[0]:
        freq[row, largest[row]] -= deficit[row]
        freq[row] = _steal_from_largest(freq[row])

    return freq[0] if single else freq


def _steal_from_largest(freq: np.ndarray) -> np.ndarray:
    freq = freq.copy()
    excess = int(freq.sum()) - TOTAL
    while excess > 0:
        i = int(freq.argmax())
        take = min(excess, int(freq[i]) - 1)
        if take <= 0:
            raise EntropyCodingError("pmf has too many bins for the coder precision")
        freq[i] -= take
        excess -= take
    if excess < 0:
        freq[int(freq.argmax())] -= excess
    return freq


def quantize_cdf(pmf, precision: int = PRECISION, offset: int = 0) -> CdfTable:
    """
    Quantize a pmf to a :class:`CdfTable` of total mass ``2**precision``.

    Args:
        pmf: Non-negative probabilities summing to at most 1
        precision: Must be 16
        offset: Smallest representable symbol

    Returns:
        CdfTable
    """
    if precision != PRECISION:
        raise EntropyCodingError(f"only {PRECISION}-bit precision is supported")
    pmf = np.asarray(pmf, dtype=np.float64).reshape(-1)
    freq = quantize_frequencies(pmf)
    return CdfTable(np.concatenate([[0], np.cumsum(freq)]), offset)


def cdf_rows(freq: np.ndarray) -> np.ndarray:
    """Cumulative tables for a 2-D frequency array, one row per distribution."""
    freq = np.atleast_2d(freq)
    return np.concatenate([np.zeros((freq.shape[0], 1), dtype=np.int64), np.cumsum(freq, axis=-1)], axis=-1)


def uniform_table(num_symbols: int, offset: int = 0) -> CdfTable:
    return quantize_cdf(np.full(num_symbols, 1.0 / num_symbols), offset=offset)
