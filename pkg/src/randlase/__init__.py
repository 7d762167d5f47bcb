"""Monte-Carlo model of a Raman-pumped random laser in a cold atomic cloud."""

from .analysis import (Scenario, ScanParam, StabilityReport, ThresholdReport, Verdict,
                       classify_stability, spectral_scan, threshold_scan)
from .medium import ChannelGeometry, CloudGeometry, CloudShape, Medium
from .spectral import SpectralModel, kinetic_lengths, letokhov_gain_length, letokhov_radius
from .transport import RunConfig, Tally, available_backends, run

__all__ = [
    "ChannelGeometry", "CloudGeometry", "CloudShape", "Medium", "RunConfig", "Scenario",
    "ScanParam", "SpectralModel", "StabilityReport", "Tally", "ThresholdReport", "Verdict",
    "available_backends", "classify_stability", "kinetic_lengths", "letokhov_gain_length",
    "letokhov_radius", "run", "spectral_scan", "threshold_scan",
]
__version__ = "0.1.0"
