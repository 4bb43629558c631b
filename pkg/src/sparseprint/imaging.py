"""Grayscale/RGB image values, binary PGM codec and border padding."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MalformedHeader, TruncatedPayload

# ITU-R 601 luma weights
GRAY_WEIGHTS = (0.2989, 0.5870, 0.1140)

_PGM_HEADER = re.compile(
    rb"P5(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)\s"
)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GrayImage:
    """An H x W field of intensities in [0, 1].

    ``pixels`` is stored as a read-only float64 array so values can be shared
    freely between threads and pipeline stages.
    """

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        object.__setattr__(self, "pixels", _frozen(arr))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @classmethod
    def clipped(cls, values: np.ndarray) -> GrayImage:
        """Build an image from arbitrary reals, clamping into [0, 1]."""
        return cls(np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class RgbImage:
    """An H x W x 3 grid of 8-bit channel values."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected an H x W x 3 grid, got shape {arr.shape}")
        if arr.min() < 0 or arr.max() > 255:
            raise ValueError("channel values must lie in [0, 255]")
        object.__setattr__(self, "pixels", _frozen(arr.astype(np.uint8)))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def to_grayscale(img: RgbImage) -> GrayImage:
    rgb = img.pixels.astype(np.float64)
    r, g, b = GRAY_WEIGHTS
    luma = (r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]) / 255.0
    return GrayImage.clipped(luma)


def read_pgm(data: bytes) -> GrayImage:
    """Decode a binary (P5, maxval 255) PGM byte string.

    Raises MalformedHeader for anything that is not an 8-bit P5 header and
    TruncatedPayload when fewer than H*W pixel bytes follow it.
    """
    m = _PGM_HEADER.match(data)
    if m is None:
        raise MalformedHeader("not a binary PGM (P5) header")
    width, height, maxval = (int(g) for g in m.groups())
    if width < 1 or height < 1:
        raise MalformedHeader(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise MalformedHeader(f"unsupported maxval {maxval} (only 255)")
    payload = data[m.end():]
    need = width * height
    if len(payload) < need:
        raise TruncatedPayload(f"expected {need} pixel bytes, found {len(payload)}")
    raw = np.frombuffer(payload, dtype=np.uint8, count=need).reshape(height, width)
    return GrayImage(raw / 255.0)


def quantize(img: GrayImage) -> np.ndarray:
    """Intensities as bytes, rounding half up."""
    return np.floor(img.pixels * 255.0 + 0.5).astype(np.uint8)


def write_pgm(img: GrayImage) -> bytes:
    header = b"P5\n%d %d\n255\n" % (img.width, img.height)
    return header + quantize(img).tobytes()


def load_pgm(path: str | Path) -> GrayImage:
    return read_pgm(Path(path).read_bytes())


def save_pgm(img: GrayImage, path: str | Path) -> None:
    Path(path).write_bytes(write_pgm(img))


def pad_replicate(img: GrayImage, margin: int) -> GrayImage:
    if margin < 0:
        raise ValueError("margin must be non-negative")
    return GrayImage(np.pad(img.pixels, margin, mode="edge"))
