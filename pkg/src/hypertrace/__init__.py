"""Trace reconstruction of binary hypermatrices under slice deletion."""

from .channel import ChannelParams, Trace, exact_pattern_prob, mc_pattern_prob, sample_trace
from .hypermatrix import (AxisTransform, ComplexPoint, Hypermatrix, Pattern, ScatterPosition,
                          SignedHypermatrix)

__version__ = "0.1.0"

__all__ = [
    "AxisTransform", "ChannelParams", "ComplexPoint", "Hypermatrix", "Pattern",
    "ScatterPosition", "SignedHypermatrix", "Trace", "exact_pattern_prob",
    "mc_pattern_prob", "sample_trace",
]
