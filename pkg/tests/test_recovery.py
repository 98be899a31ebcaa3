import numpy as np
import pytest

from liftdoa.arrays import ArrayConfig, gen_scene, simulate
from liftdoa.groups import GroupStructure
from liftdoa.lifting import LiftedMatrix
from liftdoa.recovery import (
    pick_doas,
    rank1_factor,
    recover_from_measurements,
    rmse,
    spectrum_from_lift,
    svd_reduce,
)
from liftdoa.solver import SolverOptions


class TestSvdReduce:
    def test_full_rank_rotation(self):
        # L == K: Y_sv = Y V, an orthogonal right-rotation of Y
        rng = np.random.default_rng(0)
        y = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        red = svd_reduce(y, 3)
        np.testing.assert_allclose(red.y_sv, y @ red.v, atol=1e-12)
        np.testing.assert_allclose(red.v @ red.v.conj().T, np.eye(3), atol=1e-12)

    def test_noiseless_rank_k_preserves_column_space(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2))
        c = rng.standard_normal((2, 10)) + 1j * rng.standard_normal((2, 10))
        y = a @ c  # rank 2
        red = svd_reduce(y, 2)
        assert red.y_sv.shape == (6, 2)
        # projecting Y onto span(Y_sv) leaves residual < 1e-10
        q, _ = np.linalg.qr(red.y_sv)
        resid = y - q @ (q.conj().T @ y)
        assert np.linalg.norm(resid) < 1e-10 * np.linalg.norm(y)

    def test_paper_dimensions(self):
        rng = np.random.default_rng(2)
        y = rng.standard_normal((8, 100)) + 1j * rng.standard_normal((8, 100))
        red = svd_reduce(y, 2)
        assert red.y_sv.shape == (8, 2)
        assert red.v.shape == (100, 100)

    def test_k_out_of_range(self):
        y = np.zeros((4, 6), dtype=complex)
        for k in (0, 5, 7):
            with pytest.raises(ValueError):
                svd_reduce(y, k)


class TestRank1Factor:
    def test_exact_rank_one(self):
        rng = np.random.default_rng(3)
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        s = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        xt = LiftedMatrix(np.outer(h, s), m=4, L=2, N=5)
        h_hat, s_hat = rank1_factor(xt)
        approx = np.outer(h_hat, s_hat)
        assert np.linalg.norm(approx - xt.data) < 1e-10 * np.linalg.norm(xt.data)
        # unit norm and real-positive pivot convention
        assert abs(np.linalg.norm(h_hat) - 1.0) < 1e-12
        pivot = h_hat[np.argmax(np.abs(h_hat))]
        assert abs(pivot.imag) < 1e-12 and pivot.real > 0

    def test_alignment_with_generating_vector(self):
        rng = np.random.default_rng(4)
        h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        x = rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2))
        xt = LiftedMatrix.from_factors(h, x)
        h_hat, _ = rank1_factor(xt)
        align = abs(np.vdot(h_hat, h / np.linalg.norm(h)))
        assert align > 1.0 - 1e-10

    def test_perturbed_rank_one(self):
        rng = np.random.default_rng(5)
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        s = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        base = np.outer(h, s)
        noise = rng.standard_normal(base.shape) + 1j * rng.standard_normal(base.shape)
        noisy = base + 0.01 * np.linalg.norm(base) / np.linalg.norm(noise) * noise
        h_hat, _ = rank1_factor(LiftedMatrix(noisy, 4, 3, 4))
        assert abs(np.vdot(h_hat, h / np.linalg.norm(h))) > 0.99

    def test_scale_consistency(self):
        rng = np.random.default_rng(6)
        data = rng.standard_normal((3, 8)) + 1j * rng.standard_normal((3, 8))
        h1, s1 = rank1_factor(LiftedMatrix(data, 3, 2, 4))
        h2, s2 = rank1_factor(LiftedMatrix(2.5 * data, 3, 2, 4))
        np.testing.assert_allclose(h2, h1, atol=1e-12)
        np.testing.assert_allclose(s2, 2.5 * s1, atol=1e-10)

    def test_zero_input_raises(self):
        with pytest.raises(ValueError):
            rank1_factor(LiftedMatrix(np.zeros((2, 6)), 2, 3, 3))


class TestSpectrum:
    def test_exact_lift_support(self):
        rng = np.random.default_rng(7)
        h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        x = np.zeros((10, 4), dtype=complex)
        x[[2, 7]] = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
        xt = LiftedMatrix.from_factors(h, x)
        g = GroupStructure(mode="grid", m=3, L=4, N=10)
        spec = spectrum_from_lift(xt, g)
        assert set(np.flatnonzero(spec > 1e-12)) == {2, 7}

    def test_zero_lift(self):
        g = GroupStructure(mode="grid", m=2, L=2, N=5)
        spec = spectrum_from_lift(LiftedMatrix(np.zeros((2, 10)), 2, 2, 5), g)
        np.testing.assert_array_equal(spec, np.zeros(5))

    def test_positive_homogeneity(self):
        rng = np.random.default_rng(8)
        data = rng.standard_normal((2, 10)) + 1j * rng.standard_normal((2, 10))
        g = GroupStructure(mode="grid", m=2, L=2, N=5)
        s1 = spectrum_from_lift(LiftedMatrix(data, 2, 2, 5), g)
        s2 = spectrum_from_lift(LiftedMatrix(3.0 * data, 2, 2, 5), g)
        np.testing.assert_allclose(s2, 3.0 * s1, atol=1e-12)
        assert np.argmax(s1) == np.argmax(s2)

    def test_requires_grid_mode(self):
        g = GroupStructure(mode="row", m=2, L=2, N=5)
        with pytest.raises(ValueError):
            spectrum_from_lift(LiftedMatrix(np.zeros((2, 10)), 2, 2, 5), g)


class TestPickDoas:
    def test_two_dominant_bins(self):
        grid = np.arange(-90.0, 90.0)
        spec = np.zeros(180)
        spec[77] = 2.0
        spec[118] = 1.5
        spec[3] = 0.1
        np.testing.assert_array_equal(pick_doas(spec, 2, grid), [-13.0, 28.0])

    def test_flat_spectrum_tie_rule(self):
        grid = np.linspace(-80, 80, 9)
        np.testing.assert_array_equal(pick_doas(np.ones(9), 3, grid), grid[:3])

    def test_single_spike(self):
        grid = np.linspace(-80, 80, 9)
        spec = np.zeros(9)
        spec[5] = 1.0
        np.testing.assert_array_equal(pick_doas(spec, 1, grid), [grid[5]])

    def test_scale_invariance(self):
        rng = np.random.default_rng(9)
        grid = np.linspace(-80, 80, 9)
        spec = rng.uniform(0, 1, 9)
        np.testing.assert_array_equal(pick_doas(spec, 2, grid),
                                      pick_doas(10.0 * spec, 2, grid))


class TestRmse:
    def test_exact_is_zero(self):
        assert rmse([[1.0, 2.0]], [1.0, 2.0]) == 0.0

    def test_single_trial_value(self):
        # errors (1, 2) degrees -> sqrt((1 + 4) / 2)
        assert rmse([[-12.0, 30.0]], [-13.0, 28.0]) == pytest.approx(np.sqrt(2.5))

    def test_two_trial_average(self):
        # mean-square errors 2.5 and 0 -> sqrt(1.25)
        value = rmse([[-12.0, 30.0], [-13.0, 28.0]], [-13.0, 28.0])
        assert value == pytest.approx(np.sqrt(1.25))

    def test_permutation_safe(self):
        assert rmse([[30.0, -12.0]], [28.0, -13.0]) == pytest.approx(np.sqrt(2.5))

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            rmse([[1.0, 2.0, 3.0]], [1.0, 2.0])


class TestPipeline:
    def test_noiseless_recovery_end_to_end(self):
        cfg = ArrayConfig(8, 0.5, np.arange(-90.0, 90.0, 6.0), calib_dim=3)
        doas = [cfg.grid_angles[8], cfg.grid_angles[22]]
        scene = gen_scene(cfg, doas, num_snapshots=6, snr_db=10, seed=42, noise_sigma=0.0)
        y = simulate(cfg, scene, seed=43).Y
        result = recover_from_measurements(
            y, cfg, n_sources=2, opts=SolverOptions(max_iters=30000),
            reduce_snapshots=True, eta=1e-8, noise_sigma=0.0)
        np.testing.assert_array_equal(result.doas_deg, sorted(doas))
        assert result.report.converged
        align = abs(np.vdot(result.calib,
                            scene.calib_coeffs / np.linalg.norm(scene.calib_coeffs)))
        assert align > 0.99

    def test_reduction_toggle_same_doas_noiseless(self):
        cfg = ArrayConfig(6, 0.5, np.arange(-90.0, 90.0, 9.0), calib_dim=2)
        doas = [cfg.grid_angles[4], cfg.grid_angles[15]]
        scene = gen_scene(cfg, doas, num_snapshots=5, snr_db=10, seed=3, noise_sigma=0.0)
        y = simulate(cfg, scene, seed=4).Y
        kw = dict(n_sources=2, opts=SolverOptions(max_iters=30000), eta=1e-8, noise_sigma=0.0)
        full = recover_from_measurements(y, cfg, reduce_snapshots=False, **kw)
        red = recover_from_measurements(y, cfg, reduce_snapshots=True, **kw)
        np.testing.assert_array_equal(full.doas_deg, red.doas_deg)

    def test_l_smaller_than_k_clamps_reduction(self):
        cfg = ArrayConfig(6, 0.5, np.arange(-90.0, 90.0, 9.0), calib_dim=2)
        doas = [cfg.grid_angles[4], cfg.grid_angles[15]]
        scene = gen_scene(cfg, doas, num_snapshots=1, snr_db=20, seed=5, noise_sigma=0.0)
        y = simulate(cfg, scene, seed=6).Y
        result = recover_from_measurements(
            y, cfg, n_sources=2, opts=SolverOptions(max_iters=5000),
            reduce_snapshots=True, eta=1e-8, noise_sigma=0.0)
        assert result.k_eff == 1
        assert result.doas_deg.size == 2
