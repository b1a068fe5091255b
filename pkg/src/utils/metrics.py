"""
Quality and rate-distortion metrics.

Provides RGB PSNR, rate-distortion curves and the Bjontegaard delta rate.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Tuple, Union

import numpy as np
import pandas as pd

from .errors import FormatError, ShapeError

logger = logging.getLogger(__name__)

PSNR_CAP = 99.0
MIN_CURVE_POINTS = 4
RESIDUAL_WARN_DB = 0.5


def psnr_rgb(a, b) -> float:
    """
    PSNR over all three channels of two 8-bit RGB images.

    Args:
        a: ImageRGB or (H, W, 3) array
        b: ImageRGB or (H, W, 3) array

    Returns:
        PSNR in dB, capped at 99 for identical images
    """
    pa = np.asarray(getattr(a, "pixels", a), dtype=np.float64)
    pb = np.asarray(getattr(b, "pixels", b), dtype=np.float64)
    if pa.shape != pb.shape:
        raise ShapeError(f"PSNR: image shapes differ, {pa.shape} vs {pb.shape}")
    mse = np.mean((pa - pb) ** 2)
    if mse == 0:
        return PSNR_CAP
    return float(min(10.0 * np.log10(255.0 ** 2 / mse), PSNR_CAP))


@dataclass(frozen=True)
class RDPoint:
    rate: float
    quality: float


@dataclass
class RDCurve:
    """Rate (bpp) / quality (dB) points in increasing rate order."""
    points: List[RDPoint] = field(default_factory=list)

    def __post_init__(self):
        self.points = [p if isinstance(p, RDPoint) else RDPoint(*p) for p in self.points]

    @classmethod
    def from_arrays(cls, rates: Iterable[float], qualities: Iterable[float]) -> "RDCurve":
        return cls([RDPoint(float(r), float(q)) for r, q in zip(rates, qualities)])

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points], dtype=np.float64)

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points], dtype=np.float64)

    def validate(self):
        if len(self.points) < MIN_CURVE_POINTS:
            raise FormatError(f"RD curve needs at least {MIN_CURVE_POINTS} points, got {len(self.points)}")
        rates = self.rates
        if np.any(rates <= 0):
            raise FormatError("RD curve rates must be positive")
        if np.any(np.diff(rates) <= 0):
            raise FormatError("RD curve rates must be strictly increasing")
        if np.any(np.diff(self.qualities) <= 0):
            raise FormatError("RD curve quality must increase with rate")

    def scaled(self, factor: float) -> "RDCurve":
        return RDCurve([RDPoint(p.rate * factor, p.quality) for p in self.points])


def fit_residuals(curve: RDCurve) -> float:
    """Largest |quality - cubic fit of quality over log-rate| in dB."""
    log_rate = np.log(curve.rates)
    q = curve.qualities
    coeffs = np.polyfit(log_rate, q, 3)
    return float(np.max(np.abs(np.polyval(coeffs, log_rate) - q)))


def bd_rate(anchor: RDCurve, test: RDCurve) -> float:
    """
    Bjontegaard delta rate of ``test`` against ``anchor`` in percent.

    Log-rate is fitted as a cubic polynomial of quality for each curve and
    the fits are averaged over the common quality interval. Negative values
    mean ``test`` needs less rate for the same quality.
    """
    anchor.validate()
    test.validate()

    for name, curve in (("anchor", anchor), ("test", test)):
        residual = fit_residuals(curve)
        if residual > RESIDUAL_WARN_DB:
            logger.warning(f"BD-rate {name} curve fit residual {residual:.3f} dB exceeds {RESIDUAL_WARN_DB} dB")

    qa, qt = anchor.qualities, test.qualities
    lo = max(qa.min(), qt.min())
    hi = min(qa.max(), qt.max())
    if lo >= hi:
        raise FormatError(f"RD curves do not overlap in quality ({qa.min():.2f}-{qa.max():.2f} "
                          f"vs {qt.min():.2f}-{qt.max():.2f} dB)")

    fit_a = np.polyint(np.polyfit(qa, np.log(anchor.rates), 3))
    fit_t = np.polyint(np.polyfit(qt, np.log(test.rates), 3))
    int_a = np.polyval(fit_a, hi) - np.polyval(fit_a, lo)
    int_t = np.polyval(fit_t, hi) - np.polyval(fit_t, lo)
    avg_diff = (int_t - int_a) / (hi - lo)
    return float((np.exp(avg_diff) - 1.0) * 100.0)


def read_rd_csv(path: Union[str, Path]) -> RDCurve:
    """Read a ``rate_bpp,psnr_db`` CSV."""
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise FormatError(f"{path}: {e}") from None
    missing = {"rate_bpp", "psnr_db"} - set(frame.columns)
    if missing:
        raise FormatError(f"{path}: missing column(s) {sorted(missing)}")
    frame = frame.sort_values("rate_bpp")
    return RDCurve.from_arrays(frame["rate_bpp"], frame["psnr_db"])


def write_rd_csv(path: Union[str, Path], curve: RDCurve):
    pd.DataFrame({"rate_bpp": curve.rates, "psnr_db": curve.qualities}).to_csv(path, index=False)


def summarize(values: Iterable[float]) -> Tuple[float, float]:
    """Mean and standard deviation."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        return 0.0, 0.0
    return float(arr.mean()), float(arr.std())
