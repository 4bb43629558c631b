"""Prewitt edge detection: smoothing, gradient enhancement, thresholding, thinning."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import ndimage

from . import gridio
from .errors import MalformedHeader
from .imaging import GrayImage

EDGE_TAG = "EDGE"
AUTO_MULTIPLIER = 1.0
PREWITT_CENTER_WEIGHT = 1.0

# cross-correlation stencils equivalent to the per-pixel formulas below
PREWITT_X = np.array([[-1, 0, 1], [-1, 0, 1], [-1, 0, 1]], dtype=np.float64)
PREWITT_Y = np.array([[-1, -1, -1], [0, 0, 0], [1, 1, 1]], dtype=np.float64)

ThresholdPolicy = Union[str, float]


@dataclass(frozen=True)
class PrewittNeighborhood:
    """The eight neighbours of a pixel, clockwise from the top-left corner."""

    k0: float
    k1: float
    k2: float
    k3: float
    k4: float
    k5: float
    k6: float
    k7: float
    c: float = PREWITT_CENTER_WEIGHT

    def gx(self) -> float:
        return (self.k2 + self.c * self.k3 + self.k4) - (self.k0 + self.c * self.k7 + self.k6)

    def gy(self) -> float:
        return (self.k6 + self.c * self.k5 + self.k4) - (self.k0 + self.c * self.k1 + self.k2)


@dataclass(frozen=True, eq=False)
class GradientField:
    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    direction: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.gx.shape


@dataclass(frozen=True, eq=False)
class EdgeMap:
    edges: np.ndarray
    threshold_used: float

    def __post_init__(self) -> None:
        edges = np.array(self.edges, dtype=bool, copy=True)
        if edges.ndim != 2 or edges.size == 0:
            raise ValueError("edge map must be a non-empty 2-D grid")
        if not self.threshold_used >= 0:
            raise ValueError("threshold must be non-negative")
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "threshold_used", float(self.threshold_used))

    @property
    def height(self) -> int:
        return self.edges.shape[0]

    @property
    def width(self) -> int:
        return self.edges.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.edges.shape

    def count(self) -> int:
        return int(self.edges.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EdgeMap):
            return NotImplemented
        return self.threshold_used == other.threshold_used and np.array_equal(
            self.edges, other.edges
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class EdgeParams:
    """Detection settings; enrolment and probing must use identical values.

    ``sigma=None`` disables the smoothing step. ``threshold`` is either
    ``"auto"`` or a fixed non-negative magnitude.
    """

    sigma: Optional[float] = 1.0
    threshold: ThresholdPolicy = "auto"
    thin: bool = False
    magnitude: str = "l1"

    def __post_init__(self) -> None:
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("sigma must be > 0 (or None to skip smoothing)")
        if isinstance(self.threshold, str):
            if self.threshold != "auto":
                raise ValueError(f"unknown threshold policy {self.threshold!r}")
        elif not float(self.threshold) >= 0:
            raise ValueError("fixed threshold must be >= 0")
        else:
            object.__setattr__(self, "threshold", float(self.threshold))
        if self.magnitude not in ("l1", "l2"):
            raise ValueError("magnitude must be 'l1' or 'l2'")

    def describe(self) -> str:
        sigma = "none" if self.sigma is None else repr(float(self.sigma))
        thresh = self.threshold if isinstance(self.threshold, str) else repr(self.threshold)
        return f"sigma={sigma} threshold={thresh} thin={int(self.thin)} magnitude={self.magnitude}"

    @classmethod
    def parse(cls, text: str) -> EdgeParams:
        try:
            fields = dict(item.split("=", 1) for item in text.split())
            sigma = None if fields["sigma"] == "none" else float(fields["sigma"])
            thresh = fields["threshold"]
            return cls(
                sigma=sigma,
                threshold=thresh if thresh == "auto" else float(thresh),
                thin=bool(int(fields["thin"])),
                magnitude=fields["magnitude"],
            )
        except (KeyError, ValueError) as exc:
            raise MalformedHeader(f"bad edge-params line {text!r}") from exc

    def digest(self) -> str:
        return hashlib.blake2b(self.describe().encode(), digest_size=8).hexdigest()


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(img: GrayImage, sigma: float) -> GrayImage:
    """Separable, normalised, truncated Gaussian blur with replicate borders."""
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(img.pixels, k, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, k, axis=1, mode="nearest")
    return GrayImage.clipped(out)


def prewitt_gradients(img: GrayImage | np.ndarray, magnitude: str = "l1") -> GradientField:
    """Per-pixel Prewitt derivatives on a replicate-padded image.

    ``gx`` is right column minus left column, ``gy`` bottom row minus top row
    (rows grow downward). ``magnitude="l2"`` gives the Euclidean norm instead
    of ``|gx| + |gy|``.
    """
    f = img.pixels if isinstance(img, GrayImage) else np.asarray(img, dtype=np.float64)
    p = np.pad(f, 1, mode="edge")
    h, w = f.shape
    k0 = p[0:h, 0:w]
    k1 = p[0:h, 1:w + 1]
    k2 = p[0:h, 2:w + 2]
    k3 = p[1:h + 1, 2:w + 2]
    k4 = p[2:h + 2, 2:w + 2]
    k5 = p[2:h + 2, 1:w + 1]
    k6 = p[2:h + 2, 0:w]
    k7 = p[1:h + 1, 0:w]
    c = PREWITT_CENTER_WEIGHT
    # +0.0 folds -0.0 into 0.0 so atan2 stays in (-pi, pi]
    gx = (k2 + c * k3 + k4) - (k0 + c * k7 + k6) + 0.0
    gy = (k6 + c * k5 + k4) - (k0 + c * k1 + k2) + 0.0
    if magnitude == "l1":
        mag = np.abs(gx) + np.abs(gy)
    elif magnitude == "l2":
        mag = np.hypot(gx, gy)
    else:
        raise ValueError("magnitude must be 'l1' or 'l2'")
    direction = np.where((gx == 0) & (gy == 0), 0.0, np.arctan2(gy, gx))
    return GradientField(gx=gx, gy=gy, magnitude=mag, direction=direction)


def resolve_threshold(gf: GradientField, policy: ThresholdPolicy,
                      multiplier: float = AUTO_MULTIPLIER) -> float:
    if isinstance(policy, str):
        if policy != "auto":
            raise ValueError(f"unknown threshold policy {policy!r}")
        return multiplier * float(gf.magnitude.mean())
    if not policy >= 0:
        raise ValueError("fixed threshold must be >= 0")
    return float(policy)


def threshold_edges(gf: GradientField, policy: ThresholdPolicy = "auto",
                    multiplier: float = AUTO_MULTIPLIER) -> EdgeMap:
    t = resolve_threshold(gf, policy, multiplier)
    return EdgeMap(gf.magnitude > t, threshold_used=t)


# (row, col) step towards the "forward" neighbour for each quantised direction
_NMS_OFFSETS = ((0, 1), (1, 1), (1, 0), (1, -1))


def quantize_direction(direction: np.ndarray) -> np.ndarray:
    """Map angles onto bins 0..3 for 0, 45, 90 and 135 degrees."""
    deg = np.degrees(direction) % 180.0
    return (np.floor((deg + 22.5) / 45.0).astype(np.int64)) % 4


def thin_edges(em: EdgeMap, gf: GradientField) -> EdgeMap:
    """Non-maximum suppression along the quantised gradient direction.

    A pixel survives if its magnitude is >= the backward neighbour and
    strictly > the forward neighbour, so a plateau of equal responses keeps a
    single pixel. Neighbours outside the image never suppress.
    """
    if em.shape != gf.shape:
        raise ValueError("edge map and gradient field shapes differ")
    mag = gf.magnitude
    h, w = mag.shape
    p = np.pad(mag, 1, mode="constant", constant_values=-np.inf)
    bins = quantize_direction(gf.direction)
    keep = np.zeros((h, w), dtype=bool)
    for b, (dr, dc) in enumerate(_NMS_OFFSETS):
        fwd = p[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
        bwd = p[1 - dr:1 - dr + h, 1 - dc:1 - dc + w]
        keep |= (bins == b) & (mag > fwd) & (mag >= bwd)
    return EdgeMap(em.edges & keep, threshold_used=em.threshold_used)


def detect_edges(img: GrayImage, params: EdgeParams = EdgeParams()) -> EdgeMap:
    smoothed = img if params.sigma is None else gaussian_smooth(img, params.sigma)
    gf = prewitt_gradients(smoothed, params.magnitude)
    em = threshold_edges(gf, params.threshold)
    return thin_edges(em, gf) if params.thin else em


def dump_edge_map(em: EdgeMap) -> bytes:
    return gridio.dump_grid(EDGE_TAG, em.edges, [repr(em.threshold_used)])


def load_edge_map(data: bytes) -> EdgeMap:
    bits, fields = gridio.load_grid(data, EDGE_TAG)
    if len(fields) != 1:
        raise MalformedHeader("EDGE header needs <threshold>")
    try:
        t = float(fields[0])
    except ValueError as exc:
        raise MalformedHeader(f"bad EDGE threshold {fields[0]!r}") from exc
    return EdgeMap(bits, threshold_used=t)
