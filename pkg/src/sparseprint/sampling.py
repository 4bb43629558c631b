"""Random pixel masks and the pixel-selection measurement operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gridio
from .errors import DimensionMismatch, MalformedHeader
from .imaging import GrayImage

MASK_TAG = "MASK"


@dataclass(frozen=True, eq=False)
class PixelMask:
    kept: np.ndarray
    seed: int = 0

    def __post_init__(self) -> None:
        kept = np.array(self.kept, dtype=bool, copy=True)
        if kept.ndim != 2 or kept.size == 0:
            raise ValueError("mask must be a non-empty 2-D grid")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        kept.setflags(write=False)
        object.__setattr__(self, "kept", kept)

    @property
    def height(self) -> int:
        return self.kept.shape[0]

    @property
    def width(self) -> int:
        return self.kept.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.kept.shape

    @property
    def count(self) -> int:
        return int(self.kept.sum())

    def available_fraction(self) -> float:
        return self.count / self.kept.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PixelMask):
            return NotImplemented
        return self.seed == other.seed and np.array_equal(self.kept, other.kept)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    mask: PixelMask
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True).ravel()
        if values.size != self.mask.count:
            raise ValueError(
                f"{values.size} values for {self.mask.count} kept pixels"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MeasurementSet):
            return NotImplemented
        return self.mask == other.mask and np.array_equal(self.values, other.values)

    __hash__ = None  # type: ignore[assignment]


def kept_count(height: int, width: int, available_fraction: float) -> int:
    """Number of kept pixels, rounding half up."""
    return int(np.floor(available_fraction * height * width + 0.5))


def random_mask(height: int, width: int, available_fraction: float, seed: int) -> PixelMask:
    """Keep exactly ``round(fraction * H * W)`` pixels chosen uniformly without replacement."""
    if not 0.0 <= available_fraction <= 1.0:
        raise ValueError("available_fraction must lie in [0, 1]")
    n = height * width
    k = kept_count(height, width, available_fraction)
    rng = np.random.Generator(np.random.PCG64(seed))
    kept = np.zeros(n, dtype=bool)
    kept[rng.permutation(n)[:k]] = True
    return PixelMask(kept.reshape(height, width), seed=seed)


def measure(img: GrayImage, mask: PixelMask) -> MeasurementSet:
    if img.shape != mask.shape:
        raise DimensionMismatch(f"image {img.shape} vs mask {mask.shape}")
    return MeasurementSet(mask, img.pixels[mask.kept])


def embed(ms: MeasurementSet, fill: float) -> GrayImage:
    out = np.full(ms.mask.shape, float(fill))
    out[ms.mask.kept] = ms.values
    return GrayImage(out)


def dump_mask(mask: PixelMask) -> bytes:
    return gridio.dump_grid(
        MASK_TAG, mask.kept, [str(mask.seed), repr(mask.available_fraction())]
    )


def load_mask(data: bytes) -> PixelMask:
    bits, fields = gridio.load_grid(data, MASK_TAG)
    if len(fields) != 2:
        raise MalformedHeader("MASK header needs <seed> <fraction>")
    try:
        seed = int(fields[0])
    except ValueError as exc:
        raise MalformedHeader(f"bad MASK seed {fields[0]!r}") from exc
    return PixelMask(bits, seed=seed)
