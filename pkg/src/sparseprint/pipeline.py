"""Probe processing shared by the CLI and the benchmark: degrade, reconstruct, detect."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .edges import EdgeMap, EdgeParams, detect_edges
from .imaging import GrayImage
from .sampling import PixelMask, embed, measure
from .tv_recon import ReconResult, SolverParams, reconstruct

DEGRADED_FILL = 0.0


def degrade(img: GrayImage, mask: PixelMask) -> GrayImage:
    """Viewable degraded image: kept pixels as measured, missing pixels black."""
    return embed(measure(img, mask), DEGRADED_FILL)


@dataclass(frozen=True)
class ProbeResult:
    image: GrayImage
    edge_map: EdgeMap
    recon: Optional[ReconResult] = None


def process_probe(
    img: GrayImage,
    mask: Optional[PixelMask],
    solver: SolverParams,
    edge_params: EdgeParams,
) -> ProbeResult:
    """Reconstruct from ``mask`` (when given) and extract the probe's edge map."""
    if mask is None:
        return ProbeResult(img, detect_edges(img, edge_params))
    result = reconstruct(measure(img, mask), solver)
    return ProbeResult(result.image, detect_edges(result.image, edge_params), result)
