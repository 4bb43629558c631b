"""Fingerprint identification from images with missing pixels.

Missing pixels are recovered by total-variation inpainting, then the
reconstructed print is matched against an enrolled gallery of Prewitt edge
maps.
"""

from .edges import EdgeMap, EdgeParams, detect_edges, prewitt_gradients
from .errors import SparsePrintError
from .gallery import Gallery, enroll, identify
from .imaging import GrayImage, RgbImage, read_pgm, to_grayscale, write_pgm
from .matching import MatchReport, MatchScore, match_score
from .sampling import MeasurementSet, PixelMask, embed, measure, random_mask
from .tv_recon import ReconResult, SolverParams, reconstruct, total_variation

__version__ = "0.1.0"

__all__ = [
    "EdgeMap", "EdgeParams", "Gallery", "GrayImage", "MatchReport", "MatchScore",
    "MeasurementSet", "PixelMask", "ReconResult", "RgbImage", "SolverParams",
    "SparsePrintError", "detect_edges", "embed", "enroll", "identify", "match_score",
    "measure", "prewitt_gradients", "random_mask", "read_pgm", "reconstruct",
    "to_grayscale", "total_variation", "write_pgm",
]
