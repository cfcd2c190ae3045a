"""Vessel-tree segmentation, modelling, cached path search, and labeling."""

from .errors import PipelineError, ValidationError, VesselTreeError
from .volume import BinaryMask, Volume, read_mask, read_volume, write_mask, write_volume

__version__ = "0.1.0"

__all__ = [
    "BinaryMask",
    "PipelineError",
    "ValidationError",
    "VesselTreeError",
    "Volume",
    "read_mask",
    "read_volume",
    "write_mask",
    "write_volume",
]
