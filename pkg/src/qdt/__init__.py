"""Quantum prospect-theory detection for human-sensor systems.

Builds mixed prospect density operators, computes the receiver's optimal
quantum likelihood-ratio test under probability-weighted risk, optimizes the
sender's signaling coefficients, and runs the reproduction experiments.
"""

from .errors import (
    ConfigError,
    DegenerateEvidenceError,
    NumericalError,
    PreconditionError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateEvidenceError",
    "NumericalError",
    "PreconditionError",
    "__version__",
]
