"""Inference for principal components of spiked sample covariance matrices."""

from __future__ import annotations

from .errors import ConfigError, NotPSDError, NumericalError, OverlappingSpikesError, SpikelabError, SubcriticalError
from .inference import Hypothesis, TestReport, test_equality, test_orthogonality
from .model import GAUSSIAN, TWO_POINT, EntryLaw, SpikedModel, cumulants
from .spectral import SampleSpectrum, SpikePartition

__all__ = [
    "ConfigError",
    "NumericalError",
    "SubcriticalError",
    "OverlappingSpikesError",
    "NotPSDError",
    "SpikelabError",
    "Hypothesis",
    "TestReport",
    "test_equality",
    "test_orthogonality",
    "EntryLaw",
    "GAUSSIAN",
    "TWO_POINT",
    "SpikedModel",
    "cumulants",
    "SampleSpectrum",
    "SpikePartition",
]
