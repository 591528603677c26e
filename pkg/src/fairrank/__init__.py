"""Noise-resilient fair ranking toolkit."""

__version__ = "0.1.0"

from .core import (
    ConvexCombination,
    FairnessSpec,
    FractionalAssignment,
    GroupSample,
    Instance,
    Ranking,
    utility,
    validate_instance,
)

__all__ = [
    "ConvexCombination",
    "FairnessSpec",
    "FractionalAssignment",
    "GroupSample",
    "Instance",
    "Ranking",
    "utility",
    "validate_instance",
    "__version__",
]
