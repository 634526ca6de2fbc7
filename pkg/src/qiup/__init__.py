"""Simulator for quantum imaging with undetected photons.

An object sits in the idler arm of a two-crystal nonlinear interferometer;
the camera only sees signal photons. The analytic image engine is checked
against a brute-force Fock-space evaluation of the same two-photon state.
"""

from .config import Camera, OpticalConfig
from .errors import (
    ConfigError,
    DegenerateFit,
    DegenerateFringe,
    DotsUnresolved,
    EvanescentMode,
    ImagerError,
    ParseError,
    TotalInternalReflection,
    TruncationOverflow,
    UnitarityViolation,
)
from .modes import ModeGrid, WaveVector, build_mode_grid
from .optics import ObjectMap, ObjectSample
from .engine import CameraImage, PhaseCalibration, calibrate, render_image

__version__ = "0.1.0"

__all__ = [
    "Camera",
    "CameraImage",
    "ConfigError",
    "DegenerateFit",
    "DegenerateFringe",
    "DotsUnresolved",
    "EvanescentMode",
    "ImagerError",
    "ModeGrid",
    "ObjectMap",
    "ObjectSample",
    "OpticalConfig",
    "ParseError",
    "PhaseCalibration",
    "TotalInternalReflection",
    "TruncationOverflow",
    "UnitarityViolation",
    "WaveVector",
    "build_mode_grid",
    "calibrate",
    "render_image",
]
