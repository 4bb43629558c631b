"""Deterministic synthetic fingerprint-like textures.

Each print is a binarised sinusoid ``tanh(k * sin(2*pi*s/period))`` over a
ridge-coordinate field ``s`` whose level sets are the ridges. The field is a
whorl (elliptical distance), arch (bumped straight lines) or loop (U-shaped
distance) around a random core, then warped by a few low-frequency waves.
Every construction keeps ``|grad s|`` close to 1 so the ridge period stays
near the drawn value instead of aliasing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imaging import GrayImage, quantize, save_pgm

LABEL_FILE = "labels.csv"
KINDS = ("whorl", "arch", "loop")


@dataclass(frozen=True)
class Fixture:
    label: str
    filename: str
    kind: str
    image: GrayImage


def ridge_field(size: int, rng: np.random.Generator) -> tuple[str, np.ndarray]:
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    cx, cy = rng.uniform(0.3, 0.7, 2) * size
    rot = rng.uniform(0.0, np.pi)
    u = (x - cx) * np.cos(rot) + (y - cy) * np.sin(rot)
    v = -(x - cx) * np.sin(rot) + (y - cy) * np.cos(rot)

    kind = KINDS[int(rng.integers(len(KINDS)))]
    if kind == "whorl":
        a, b = rng.uniform(0.8, 1.25, 2)
        s = np.hypot(u * a, v * b)
    elif kind == "arch":
        w = rng.uniform(0.15, 0.3) * size
        s = v + rng.uniform(0.2, 0.45) * w * np.exp(-((u / w) ** 2))
    else:
        s = np.hypot(u, np.minimum(v, 0.0))

    for _ in range(4):
        wavelength = rng.uniform(0.4, 1.2) * size
        amp = rng.uniform(0.02, 0.05) * wavelength
        k = rng.normal(size=2)
        k /= np.linalg.norm(k)
        s = s + amp * np.sin(2 * np.pi * (k[0] * x + k[1] * y) / wavelength + rng.uniform(0, 2 * np.pi))
    return kind, s


def synth_print(size: int, rng: np.random.Generator, sharpness: float = 2.0) -> tuple[str, GrayImage]:
    kind, s = ridge_field(size, rng)
    period = rng.uniform(8.0, 11.0)
    phase = rng.uniform(0.0, 2 * np.pi)
    ridges = np.tanh(sharpness * np.sin(2 * np.pi * s / period + phase)) / np.tanh(sharpness)
    return kind, GrayImage.clipped(0.5 + 0.5 * ridges)


def generate(count: int, size: int, seed: int) -> list[Fixture]:
    """``count`` prints; print ``i`` depends only on ``(seed, i)``.

    Images come back on the 8-bit lattice, identical to what ``save_pgm`` stores.
    """
    if count < 0 or size < 1:
        raise ValueError("count must be >= 0 and size >= 1")
    out = []
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        kind, img = synth_print(size, rng)
        img = GrayImage(quantize(img) / 255.0)
        label = f"print{i:03d}"
        out.append(Fixture(label, f"{label}.pgm", kind, img))
    return out


def write_fixtures(out_dir: str | Path, count: int, size: int, seed: int) -> list[Fixture]:
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    fixtures = generate(count, size, seed)
    for fx in fixtures:
        save_pgm(fx.image, root / fx.filename)
    with open(root / LABEL_FILE, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["file", "label", "kind"])
        for fx in fixtures:
            writer.writerow([fx.filename, fx.label, fx.kind])
    return fixtures


def read_labels(out_dir: str | Path) -> dict[str, str]:
    """Map of PGM filename to ground-truth label."""
    with open(Path(out_dir) / LABEL_FILE, newline="") as fh:
        return {row["file"]: row["label"] for row in csv.DictReader(fh)}
