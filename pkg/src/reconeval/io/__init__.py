"""Parsers and writers for every external artifact the toolkit consumes."""

from ..errors import ParseError
from .colmap import (
    ColmapCamera,
    ColmapImage,
    ColmapPoint3D,
    ColmapSparseModel,
    parse_colmap_text,
    write_colmap_text,
)
from .exposure import ExposureRecord, parse_exposure_csv
from .ply import read_ply, write_ply
from .png import read_png, write_png
from .trajectory import parse_groundtruth_tf, parse_trajectory, write_trajectory

__all__ = [
    "ParseError",
    "ColmapCamera",
    "ColmapImage",
    "ColmapPoint3D",
    "ColmapSparseModel",
    "ExposureRecord",
    "parse_colmap_text",
    "parse_exposure_csv",
    "parse_groundtruth_tf",
    "parse_trajectory",
    "read_ply",
    "read_png",
    "write_colmap_text",
    "write_ply",
    "write_png",
    "write_trajectory",
]
