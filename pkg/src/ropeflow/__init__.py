"""Dynamic rotary-position extrapolation for flow-matching image
transformers, with the spectral diagnostics that motivate it and a
desk-scale training/evaluation harness."""

from . import dataggen, dynamic, evalkit, extrapolation, flow, kernels, rope2d, spectral
from .dynamic import PePolicy, ScaleSchedule
from .extrapolation import RampParams
from .rope2d import FrequencyTable, HeadVectors, PositionGrid, build_frequency_table

__version__ = "0.1.0"

__all__ = [
    "FrequencyTable",
    "HeadVectors",
    "PePolicy",
    "PositionGrid",
    "RampParams",
    "ScaleSchedule",
    "build_frequency_table",
    "dataggen",
    "dynamic",
    "evalkit",
    "extrapolation",
    "flow",
    "kernels",
    "rope2d",
    "spectral",
]
