"""Availability sweep: degrade -> reconstruct -> detect -> identify, repeated per seed.

Trial ``t`` at fraction index ``i`` probes ``probes[t % len(probes)]`` with a
fresh mask whose seed is derived from ``(base_seed, i, t)``; the results are a
pure function of the configuration.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import gallery as gal
from .edges import EdgeParams
from .errors import SparsePrintError
from .imaging import GrayImage, load_pgm
from .matching import DEFAULT_THRESHOLD, UNKNOWN
from .pipeline import process_probe
from .sampling import random_mask
from .tv_recon import SolverParams, psnr

SCHEMA = "SWEEP-1"
COLUMNS = [
    "fraction", "trial", "seed", "probe", "truth", "psnr", "best_label",
    "best_percentage", "accepted", "correct", "iterations", "converged", "error",
]
SUMMARY_COLUMNS = ["fraction", "trials", "mean_psnr", "acceptance_rate", "correct_rate"]


@dataclass(frozen=True)
class Probe:
    path: str
    truth: str


@dataclass(frozen=True)
class SweepConfig:
    fractions: Sequence[float]
    probes: Sequence[Probe]
    gallery_path: str
    trials_per_fraction: int = 10
    base_seed: int = 0
    solver: SolverParams = SolverParams()
    threshold: float = DEFAULT_THRESHOLD
    jobs: int = 1

    def __post_init__(self) -> None:
        fr = list(self.fractions)
        if not fr or any(not 0.0 < f <= 1.0 for f in fr):
            raise ValueError("fractions must lie in (0, 1]")
        if fr != sorted(fr):
            raise ValueError("fractions must be sorted ascending")
        if self.trials_per_fraction < 1:
            raise ValueError("trials_per_fraction must be >= 1")
        if not self.probes:
            raise ValueError("at least one probe is required")


@dataclass
class SweepRow:
    fraction: float
    trial: int
    seed: int
    probe: str
    truth: str
    psnr: float = math.nan
    best_label: str = ""
    best_percentage: float = math.nan
    accepted: bool = False
    correct: bool = False
    iterations: int = 0
    converged: bool = False
    error: str = ""

    def cells(self) -> list[str]:
        return [
            f"{self.fraction:g}", str(self.trial), str(self.seed), self.probe, self.truth,
            _fmt(self.psnr), self.best_label, _fmt(self.best_percentage),
            str(int(self.accepted)), str(int(self.correct)),
            str(self.iterations), str(int(self.converged)), self.error,
        ]


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)

    def summary(self) -> list[dict]:
        out = []
        for f in sorted({r.fraction for r in self.rows}):
            rows = [r for r in self.rows if r.fraction == f]
            vals = [r.psnr for r in rows if not math.isnan(r.psnr)]
            out.append({
                "fraction": f,
                "trials": len(rows),
                "mean_psnr": float(np.mean(vals)) if vals else math.nan,
                "acceptance_rate": sum(r.accepted for r in rows) / len(rows),
                "correct_rate": sum(r.correct for r in rows) / len(rows),
            })
        return out

    def correct_rates(self) -> list[float]:
        return [s["correct_rate"] for s in self.summary()]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([SCHEMA, *COLUMNS])
        for i, row in enumerate(self.rows):
            writer.writerow([i, *row.cells()])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for s in self.summary():
            writer.writerow([
                f"{s['fraction']:g}", s["trials"], _fmt(s["mean_psnr"]),
                f"{s['acceptance_rate']:.4f}", f"{s['correct_rate']:.4f}",
            ])
        return buf.getvalue()


def _fmt(x: float) -> str:
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.4f}"


def trial_seed(base_seed: int, fraction_index: int, trial: int) -> int:
    ss = np.random.SeedSequence([base_seed, fraction_index, trial])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _run_trial(args: tuple) -> SweepRow:
    fraction, trial, seed, probe, img, g, solver, threshold = args
    row = SweepRow(fraction, trial, seed, probe.path, probe.truth)
    try:
        mask = random_mask(img.height, img.width, fraction, seed)
        res = process_probe(img, mask, solver, g.edge_params)
        report = gal.identify(g, res.edge_map, g.edge_params, threshold)
    except SparsePrintError as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        row.correct = probe.truth == UNKNOWN
        return row
    row.psnr = psnr(img, res.image)
    row.iterations = res.recon.iterations_used
    row.converged = res.recon.converged
    row.best_label = report.best_label or ""
    row.best_percentage = report.best_percentage
    row.accepted = report.accepted
    row.correct = report.decision == probe.truth
    return row


def run_sweep(cfg: SweepConfig) -> SweepResult:
    g = gal.load(cfg.gallery_path)
    images: dict[str, GrayImage] = {p.path: load_pgm(p.path) for p in cfg.probes}
    tasks = []
    for fi, fraction in enumerate(cfg.fractions):
        for t in range(cfg.trials_per_fraction):
            probe = cfg.probes[t % len(cfg.probes)]
            tasks.append((fraction, t, trial_seed(cfg.base_seed, fi, t), probe,
                          images[probe.path], g, cfg.solver, cfg.threshold))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_run_trial, tasks))
    else:
        rows = [_run_trial(t) for t in tasks]
    return SweepResult(rows)


def probes_from_paths(paths: Sequence[str], labels: Optional[dict[str, str]] = None,
                      enrolled: Sequence[str] = ()) -> list[Probe]:
    """Ground truth per probe: the labels file entry, else the file stem.

    A truth that is not among ``enrolled`` labels is expected to be rejected,
    so it is replaced by ``UNKNOWN``.
    """
    out = []
    for p in paths:
        name = Path(p).name
        truth = (labels or {}).get(name, Path(p).stem)
        if enrolled and truth not in enrolled:
            truth = UNKNOWN
        out.append(Probe(str(p), truth))
    return out


def count_inversions(rates: Sequence[float]) -> int:
    """Adjacent decreases in a sequence that should be non-decreasing."""
    return sum(1 for a, b in zip(rates, rates[1:]) if b < a)


def transition_fraction(fractions: Sequence[float], rates: Sequence[float]) -> Optional[float]:
    """Smallest fraction from which every correct rate is 1.0, or None."""
    start = None
    for f, r in zip(reversed(fractions), reversed(rates)):
        if r < 1.0:
            break
        start = f
    return start
