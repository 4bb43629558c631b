"""Edge-map agreement scores and the gallery identification rule."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .edges import EdgeMap
from .errors import DimensionMismatch, EmptyGallery

DEFAULT_THRESHOLD = 90.0
UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class MatchScore:
    agreeing_pixels: int
    total_pixels: int

    @property
    def percentage(self) -> float:
        return 100.0 * self.agreeing_pixels / self.total_pixels


@dataclass(frozen=True)
class MatchReport:
    scores: list[tuple[str, MatchScore]]
    best_label: Optional[str]
    accepted: bool
    threshold: float = DEFAULT_THRESHOLD
    skipped: list[str] = field(default_factory=list)

    @property
    def best_percentage(self) -> Optional[float]:
        return self.scores[0][1].percentage if self.scores else None

    @property
    def decision(self) -> str:
        return self.best_label if self.accepted else UNKNOWN

    def to_csv(self) -> str:
        """Rows of ``label,percentage,agreeing,total`` plus a trailing DECISION line."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["label", "percentage", "agreeing", "total"])
        for label, s in self.scores:
            writer.writerow([label, f"{s.percentage:.4f}", s.agreeing_pixels, s.total_pixels])
        best = self.best_percentage
        writer.writerow(["DECISION", self.decision, "" if best is None else f"{best:.4f}"])
        return buf.getvalue()


def match_score(probe: EdgeMap, gallery: EdgeMap) -> MatchScore:
    """Fraction of pixels on which both maps agree (edge/edge or blank/blank)."""
    if probe.shape != gallery.shape:
        raise DimensionMismatch(f"probe {probe.shape} vs gallery {gallery.shape}")
    agree = int(np.count_nonzero(probe.edges == gallery.edges))
    return MatchScore(agreeing_pixels=agree, total_pixels=probe.edges.size)


def identify(
    probe: EdgeMap,
    entries: Iterable[tuple[str, EdgeMap]],
    threshold: float = DEFAULT_THRESHOLD,
) -> MatchReport:
    """Score ``probe`` against every (label, edge map) pair of matching size.

    Entries of a different size are skipped and listed in ``skipped``. The
    best candidate is the highest percentage, ties going to the smallest
    label; it is accepted only if strictly above ``threshold``.
    """
    scores = []
    skipped = []
    for label, em in entries:
        if em.shape != probe.shape:
            skipped.append(label)
            continue
        scores.append((label, match_score(probe, em)))
    if not scores:
        raise EmptyGallery("no gallery entry is dimension-compatible with the probe")
    # integer agreement counts share a denominator, so sort on counts exactly
    scores.sort(key=lambda item: (-item[1].agreeing_pixels, item[0]))
    best_label, best = scores[0]
    return MatchReport(
        scores=scores,
        best_label=best_label,
        accepted=best.percentage > threshold,
        threshold=threshold,
        skipped=skipped,
    )
