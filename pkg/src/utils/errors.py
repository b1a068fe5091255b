"""
Exception hierarchy for the CCS codec.

Every module raises one of these so the command-line front end can map a
failure to its exit code without inspecting messages.
"""

from typing import Optional


class CCSError(Exception):
    """Base class for all codec errors."""


class ShapeError(CCSError, ValueError):
    """Channel, shape or dimension contract violated."""


class FormatError(CCSError, ValueError):
    """Malformed file, header or bitstream."""


class EntropyCodingError(CCSError):
    """Range coder failure: out-of-support symbol, exhausted stream, bad table."""


class ConfigError(CCSError, ValueError):
    """Unknown preset or role, inconsistent options, config/params mismatch."""


class InvariantViolation(CCSError, AssertionError):
    """An internal invariant did not hold."""


class TrainingDivergedError(CCSError):
    """Training produced a non-finite loss."""

    def __init__(self, step: int, message: Optional[str] = None):
        self.step = step
        super().__init__(message or f"non-finite loss at step {step}")
