import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparseprint.errors import DimensionMismatch, EmptyMeasurement
from sparseprint.fixtures import synth_print
from sparseprint.imaging import GrayImage
from sparseprint.sampling import MeasurementSet, PixelMask, measure, random_mask
from sparseprint.tv_recon import (
    CHARBONNIER_EPS,
    SolverParams,
    objective,
    objective_gradient,
    psnr,
    reconstruct,
    smoothed_objective,
    total_variation,
)


def brute_tv(u):
    h, w = len(u), len(u[0])
    total = 0.0
    for i in range(h):
        for j in range(w):
            if j + 1 < w:
                total += abs(u[i][j + 1] - u[i][j])
            if i + 1 < h:
                total += abs(u[i + 1][j] - u[i][j])
    return total


def central_difference_gradient(f, u, h=1e-6):
    g = np.zeros_like(u)
    for idx in np.ndindex(u.shape):
        up, dn = u.copy(), u.copy()
        up[idx] += h
        dn[idx] -= h
        g[idx] = (f(up) - f(dn)) / (2 * h)
    return g


class TestTotalVariation:
    def test_constant_is_zero(self):
        assert total_variation(GrayImage(np.full((4, 5), 0.3))) == 0.0

    def test_two_by_two(self):
        assert total_variation(GrayImage(np.array([[0.0, 1.0], [0.0, 1.0]]))) == 2.0

    @given(st.integers(0, 2**32))
    def test_transpose_invariant(self, seed):
        u = np.random.default_rng(seed).random((4, 6))
        assert total_variation(u) == pytest.approx(total_variation(u.T), rel=1e-12)

    def test_matches_double_loop(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            u = rng.random((5, 5))
            assert total_variation(u) == pytest.approx(brute_tv(u.tolist()), rel=1e-12)


class TestObjective:
    def test_consistent_constant_is_zero(self):
        img = GrayImage(np.full((3, 3), 0.4))
        ms = measure(img, random_mask(3, 3, 0.5, 1))
        assert objective(img, ms, SolverParams()) == 0.0

    def test_single_residual(self):
        kept = np.zeros((3, 3), dtype=bool)
        kept[1, 1] = True
        ms = MeasurementSet(PixelMask(kept), [1.0])
        value = objective(GrayImage(np.zeros((3, 3))), ms, SolverParams(eta=2.0, alpha=1.0))
        assert value == pytest.approx(1.0)

    def test_without_kept_pixels_only_tv_counts(self):
        ms = MeasurementSet(PixelMask(np.zeros((2, 2))), [])
        a = GrayImage(np.array([[0.1, 0.2], [0.3, 0.4]]))
        b = GrayImage(a.pixels + 0.5)
        p = SolverParams(alpha=0.7)
        assert objective(a, ms, p) == pytest.approx(objective(b, ms, p))

    def test_dimension_mismatch(self):
        ms = MeasurementSet(PixelMask(np.ones((2, 2))), np.zeros(4))
        with pytest.raises(DimensionMismatch):
            objective(GrayImage(np.zeros((3, 3))), ms, SolverParams())


class TestGradient:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        u = rng.random((4, 4))
        ms = measure(GrayImage(rng.random((4, 4))), random_mask(4, 4, 0.5, seed))
        p = SolverParams(alpha=0.8, eta=1.7)
        fd = central_difference_gradient(lambda v: smoothed_objective(v, ms, p), u)
        g = objective_gradient(u, ms, p)
        assert np.linalg.norm(g - fd) / np.linalg.norm(fd) <= 1e-4

    def test_smoothing_bound(self):
        # Charbonnier adds at most eps per difference term
        rng = np.random.default_rng(3)
        u = rng.random((6, 6))
        ms = MeasurementSet(PixelMask(np.zeros((6, 6))), [])
        p = SolverParams()
        exact = objective(GrayImage(u), ms, p)
        smooth = smoothed_objective(u, ms, p)
        assert exact <= smooth <= exact + CHARBONNIER_EPS * 60


class TestReconstruct:
    def test_full_mask_is_exact(self):
        img = GrayImage(np.random.default_rng(0).random((9, 7)))
        res = reconstruct(measure(img, random_mask(9, 7, 1.0, 0)))
        assert res.image == img
        assert res.iterations_used <= 1
        assert res.converged
        assert res.final_fidelity == 0.0

    def test_empty_measurement(self):
        with pytest.raises(EmptyMeasurement):
            reconstruct(MeasurementSet(PixelMask(np.zeros((3, 3))), []))

    def test_kept_pixels_are_exact(self):
        rng = np.random.default_rng(5)
        img = GrayImage(rng.random((16, 16)))
        mask = random_mask(16, 16, 0.4, 5)
        res = reconstruct(measure(img, mask), SolverParams(max_iters=200))
        assert np.abs(res.image.pixels[mask.kept] - img.pixels[mask.kept]).max() <= 1e-9
        assert res.final_fidelity <= 1e-9

    def test_piecewise_constant_two_level(self):
        truth = np.zeros((8, 8))
        truth[:, 4:] = 1.0
        res = reconstruct(measure(GrayImage(truth), random_mask(8, 8, 0.5, 0)))
        assert np.abs(res.image.pixels - truth).max() <= 0.05

    def test_iteration_cap_and_soft_failure(self):
        img, = [synth_print(32, np.random.default_rng(1))[1]]
        res = reconstruct(measure(img, random_mask(32, 32, 0.5, 1)), SolverParams(max_iters=3))
        assert res.iterations_used == 3
        assert not res.converged
        assert 0.0 <= res.image.pixels.min() and res.image.pixels.max() <= 1.0

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32), st.floats(0.1, 0.9), st.sampled_from([0.25, 0.5, 1.0]))
    def test_descent(self, seed, fraction, step):
        rng = np.random.default_rng(seed)
        img = GrayImage(rng.random((6, 6)))
        mask = random_mask(6, 6, fraction, seed)
        if mask.count == 0:
            return
        ms = measure(img, mask)
        p = SolverParams(step_size=step, max_iters=60, tol=0.0)
        values = []
        reconstruct(ms, p, callback=lambda k, u: values.append(smoothed_objective(u, ms, p)))
        assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))

    def test_median_psnr_grows_with_availability(self):
        img = synth_print(64, np.random.default_rng(7))[1]
        fractions = [0.1 * k for k in range(1, 11)]
        medians = []
        for f in fractions:
            vals = [psnr(img, reconstruct(measure(img, random_mask(64, 64, f, s))).image)
                    for s in range(10)]
            medians.append(np.median(vals))
        inversions = sum(b < a for a, b in zip(medians, medians[1:]))
        assert inversions <= 1
        assert math.isinf(medians[-1])


def test_psnr_identical_is_inf():
    img = GrayImage(np.zeros((2, 2)))
    assert psnr(img, img) == math.inf


def test_psnr_value():
    a = GrayImage(np.zeros((1, 4)))
    b = GrayImage(np.full((1, 4), 0.1))
    assert psnr(a, b) == pytest.approx(20.0)


def test_solver_params_validation():
    with pytest.raises(ValueError):
        SolverParams(alpha=0)
    with pytest.raises(ValueError):
        SolverParams(max_iters=0)
    with pytest.raises(ValueError):
        SolverParams(step_size=-1)
