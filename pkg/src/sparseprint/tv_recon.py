"""Total-variation inpainting of masked pixel measurements.

The solver minimises

    G(X) = eta/2 * ||z - D X||^2 + alpha * TV(X)

with anisotropic TV (l1 norm of forward differences). TV is smoothed with the
Charbonnier penalty ``sqrt(t**2 + eps**2)`` so that it has a gradient, and the
kept pixels are re-projected onto their measured values after every step,
which enforces ``D X = z`` exactly for noiseless data.

Each step is a diagonally scaled gradient step. The scaling is the diagonal of
the quadratic majoriser of the Charbonnier term at the current iterate (the
lagged-diffusivity weights), so any ``step_size`` in (0, 1] decreases the
smoothed objective. Without the scaling the gradient's Lipschitz constant is
about ``8 * alpha / eps`` and a fixed step is impractically small. Steps are
taken from a Nesterov-extrapolated point and fall back to a plain step
whenever that would raise the objective, which keeps the iteration monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, EmptyMeasurement
from .imaging import GrayImage
from .sampling import MeasurementSet, embed

CHARBONNIER_EPS = 1e-3


@dataclass(frozen=True)
class SolverParams:
    alpha: float = 1.0
    eta: float = 1.0
    max_iters: int = 2000
    step_size: float = 1.0
    tol: float = 1e-5
    fidelity_tol: float = 1e-6

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.step_size > 0:
            raise ValueError("step_size must be > 0")
        if self.tol < 0 or self.fidelity_tol < 0:
            raise ValueError("tolerances must be non-negative")


@dataclass(frozen=True)
class ReconResult:
    image: GrayImage
    iterations_used: int
    final_objective: float
    final_fidelity: float
    converged: bool


def _forward_diffs(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # last column / row differences are zero and therefore omitted
    return np.diff(u, axis=1), np.diff(u, axis=0)


def total_variation(img: GrayImage | np.ndarray) -> float:
    u = img.pixels if isinstance(img, GrayImage) else np.asarray(img, dtype=np.float64)
    dx, dy = _forward_diffs(u)
    return float(np.abs(dx).sum() + np.abs(dy).sum())


def smoothed_total_variation(u: np.ndarray, eps: float = CHARBONNIER_EPS) -> float:
    dx, dy = _forward_diffs(u)
    return float(np.sqrt(dx * dx + eps * eps).sum() + np.sqrt(dy * dy + eps * eps).sum())


def _check_dims(u: np.ndarray, ms: MeasurementSet) -> None:
    if u.shape != ms.mask.shape:
        raise DimensionMismatch(f"image {u.shape} vs measurements {ms.mask.shape}")


def _fidelity(u: np.ndarray, ms: MeasurementSet) -> float:
    r = ms.values - u[ms.mask.kept]
    return float(np.sqrt(np.dot(r, r)))


def objective(img: GrayImage, ms: MeasurementSet, p: SolverParams) -> float:
    _check_dims(img.pixels, ms)
    return 0.5 * p.eta * _fidelity(img.pixels, ms) ** 2 + p.alpha * total_variation(img)


def smoothed_objective(
    u: np.ndarray, ms: MeasurementSet, p: SolverParams, eps: float = CHARBONNIER_EPS
) -> float:
    """G with the TV term replaced by its Charbonnier smoothing. ``u`` may be any real grid."""
    u = np.asarray(u, dtype=np.float64)
    _check_dims(u, ms)
    return 0.5 * p.eta * _fidelity(u, ms) ** 2 + p.alpha * smoothed_total_variation(u, eps)


def _tv_gradient_and_weights(u: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    dx, dy = _forward_diffs(u)
    wx = 1.0 / np.sqrt(dx * dx + eps * eps)
    wy = 1.0 / np.sqrt(dy * dy + eps * eps)
    fx = dx * wx
    fy = dy * wy
    grad = np.zeros_like(u)
    grad[:, 1:] += fx
    grad[:, :-1] -= fx
    grad[1:, :] += fy
    grad[:-1, :] -= fy
    diag = np.zeros_like(u)
    diag[:, 1:] += wx
    diag[:, :-1] += wx
    diag[1:, :] += wy
    diag[:-1, :] += wy
    return grad, diag


def objective_gradient(
    u: np.ndarray, ms: MeasurementSet, p: SolverParams, eps: float = CHARBONNIER_EPS
) -> np.ndarray:
    """Gradient of the smoothed objective with respect to every pixel of ``u``."""
    u = np.asarray(u, dtype=np.float64)
    _check_dims(u, ms)
    tv_grad, _ = _tv_gradient_and_weights(u, eps)
    grad = p.alpha * tv_grad
    kept = ms.mask.kept
    grad[kept] += p.eta * (u[kept] - ms.values)
    return grad


def _scaled_step(u: np.ndarray, kept: np.ndarray, step_size: float) -> np.ndarray:
    # Kept pixels sit on their measurements, so the fidelity term adds no
    # gradient there and alpha cancels between gradient and scaling.
    tv_grad, w_diag = _tv_gradient_and_weights(u, CHARBONNIER_EPS)
    delta = np.zeros_like(u)
    np.divide(tv_grad, w_diag, out=delta, where=w_diag > 0)
    delta *= step_size
    delta[kept] = 0.0
    return u - delta


def reconstruct(
    ms: MeasurementSet,
    p: SolverParams = SolverParams(),
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> ReconResult:
    """Recover a full image from masked measurements by TV minimisation.

    Starts from the measurements embedded into a constant field at their mean
    value. Stops once the relative change of the iterate drops below
    ``p.tol`` or after ``p.max_iters`` steps; ``callback(k, u)`` sees every
    projected iterate. The returned image is clamped to [0, 1].
    """
    kept = ms.mask.kept
    if ms.values.size == 0:
        raise EmptyMeasurement("no kept pixels: the reconstruction is unanchored")

    u = embed(ms, float(ms.values.mean())).pixels.copy()
    prev = u.copy()
    f_u = smoothed_total_variation(u)
    t = 1.0
    met_tol = False
    iters = 0
    for iters in range(1, p.max_iters + 1):
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = u + ((t - 1.0) / t_next) * (u - prev)
        cand = _scaled_step(y, kept, p.step_size)
        f_cand = smoothed_total_variation(cand)
        if f_cand > f_u:
            # momentum overshot: restart from a plain step, which cannot increase G
            cand = _scaled_step(u, kept, p.step_size)
            f_cand = smoothed_total_variation(cand)
            t_next = 1.0
        prev, u, f_u, t = u, cand, f_cand, t_next
        if callback is not None:
            callback(iters, u.copy())
        ref = max(float(np.linalg.norm(u)), 1e-12)
        if float(np.linalg.norm(u - prev)) / ref < p.tol:
            met_tol = True
            break

    image = GrayImage.clipped(u)
    fidelity = _fidelity(image.pixels, ms)
    return ReconResult(
        image=image,
        iterations_used=iters,
        final_objective=objective(image, ms, p),
        final_fidelity=fidelity,
        converged=met_tol and fidelity <= p.fidelity_tol,
    )


def psnr(reference: GrayImage, estimate: GrayImage) -> float:
    """Peak signal-to-noise ratio in dB for unit-peak images; ``inf`` on exact match."""
    if reference.shape != estimate.shape:
        raise DimensionMismatch(f"{reference.shape} vs {estimate.shape}")
    mse = float(np.mean((reference.pixels - estimate.pixels) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)
