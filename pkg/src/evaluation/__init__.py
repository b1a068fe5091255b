"""
Evaluation module for the CCS codec.

Rate/quality measurement over image sets and codec comparison.
"""

from .evaluator import CodecEvaluator, evaluate_rd

__all__ = [
    "CodecEvaluator",
    "evaluate_rd",
]
