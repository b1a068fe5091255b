"""
Entropy coding: quantized CDF tables, the range coder, the latent
probability models and the tables that connect them.
"""

from .cdf import PRECISION, TOTAL, CdfTable, quantize_cdf, quantize_frequencies, uniform_table
from .models import (
    LATENT_BOUND,
    PROB_FLOOR,
    SIGMA_FLOOR,
    FactorizedModel,
    GaussianField,
    ScaleTable,
    clamp_latent,
    factorized_likelihood,
    gather_params,
    gaussian_bin_likelihood,
    mixture_bin_likelihood,
    quantize_latent,
    rate_bits,
    rate_estimate,
    soft_floor,
    split_gather_output,
)
from .range_coder import RangeDecoder, RangeEncoder, rc_decode, rc_encode
from .tables import (
    RAW_TABLE,
    ScaleTableCache,
    TableSet,
    decode_values,
    encode_values,
    factorized_tables,
    gaussian_tables,
)

__all__ = [
    "LATENT_BOUND",
    "PRECISION",
    "PROB_FLOOR",
    "RAW_TABLE",
    "SIGMA_FLOOR",
    "TOTAL",
    "CdfTable",
    "FactorizedModel",
    "GaussianField",
    "RangeDecoder",
    "RangeEncoder",
    "ScaleTable",
    "ScaleTableCache",
    "TableSet",
    "clamp_latent",
    "decode_values",
    "encode_values",
    "factorized_likelihood",
    "factorized_tables",
    "gather_params",
    "gaussian_bin_likelihood",
    "gaussian_tables",
    "mixture_bin_likelihood",
    "quantize_cdf",
    "quantize_frequencies",
    "quantize_latent",
    "rate_bits",
    "rate_estimate",
    "rc_decode",
    "rc_encode",
    "soft_floor",
    "split_gather_output",
    "uniform_table",
]
