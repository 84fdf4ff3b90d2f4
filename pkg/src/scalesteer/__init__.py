"""Spot detection with scalable wavelet multipliers.

An undecimated Meyer-type tight frame is refined within each octave by a
family of trigonometric Fourier multipliers. Because the family is closed
under dilation, the response at any intermediate scale is a fixed linear
combination of the computed channels, which gives a continuous local scale
and a radius estimate per detection.
"""

__version__ = "0.1.0"

from .frame import MeyerProfile, FilterBank, WaveletPyramid, build_filter_bank, analyze, synthesize
from .multipliers import (TrigMultiplierSpec, MultiplierBank, bspline_spec, make_spec,
                          steering_matrix, steer_pyramid, response_polynomial, argmax_scale,
                          quality_metric, quality_sweep)
from .complex_channel import ComplexWaveletSpec, polar_coefficients, phase_to_radius
from .detector import DetectorConfig, Detection, detect, default_calibration
from .simdata import Disk, GroundTruthScene, gen_scene, radius_sweep
from .evalkit import match, jaccard, rmse, log_baseline

__all__ = [
    "__version__",
    "MeyerProfile", "FilterBank", "WaveletPyramid", "build_filter_bank", "analyze", "synthesize",
    "TrigMultiplierSpec", "MultiplierBank", "bspline_spec", "make_spec", "steering_matrix",
    "steer_pyramid", "response_polynomial", "argmax_scale", "quality_metric", "quality_sweep",
    "ComplexWaveletSpec", "polar_coefficients", "phase_to_radius",
    "DetectorConfig", "Detection", "detect", "default_calibration",
    "Disk", "GroundTruthScene", "gen_scene", "radius_sweep",
    "match", "jaccard", "rmse", "log_baseline",
]
