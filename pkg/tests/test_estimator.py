import numpy as np
import pytest
from sklearn.base import clone

from liftdoa.arrays import ArrayConfig, gen_scene, simulate
from liftdoa.estimator import LiftedDoAEstimator


def make_snapshots(seed=0, noise_sigma=0.0, snr_db=15, n_snap=6):
    cfg = ArrayConfig(8, 0.5, np.arange(-90.0, 90.0, 6.0), calib_dim=3)
    doas = [cfg.grid_angles[8], cfg.grid_angles[22]]
    scene = gen_scene(cfg, doas, n_snap, snr_db, seed=seed, noise_sigma=noise_sigma)
    y = simulate(cfg, scene, seed=seed + 1).Y
    return y.T, cfg, scene  # (n_snapshots, n_sensors)


class TestSklearnProtocol:
    def test_get_set_params_roundtrip(self):
        est = LiftedDoAEstimator(n_sources=2, calib_dim=3)
        params = est.get_params()
        assert params["n_sources"] == 2
        est2 = LiftedDoAEstimator().set_params(**params)
        assert est2.get_params() == params

    def test_clone(self):
        est = LiftedDoAEstimator(n_sources=2, group_mode="row", eta=0.5)
        c = clone(est)
        assert c.get_params() == est.get_params()

    def test_fit_returns_self(self):
        x, cfg, _ = make_snapshots()
        est = LiftedDoAEstimator(n_sources=2, grid_angles=cfg.grid_angles,
                                 calib_dim=3, eta=1e-8, noise_sigma=0.0,
                                 max_iters=30000)
        assert est.fit(x) is est


class TestFit:
    def test_noiseless_recovers_doas(self):
        x, cfg, scene = make_snapshots(seed=4)
        est = LiftedDoAEstimator(n_sources=2, grid_angles=cfg.grid_angles,
                                 calib_dim=3, eta=1e-8, noise_sigma=0.0,
                                 max_iters=30000)
        doas = est.fit_predict(x)
        np.testing.assert_array_equal(doas, np.sort(scene.true_doas))
        assert est.spectrum_.shape == (cfg.n_grid,)
        assert est.n_features_in_ == 8
        assert est.report_.converged
        align = abs(np.vdot(est.calib_, scene.calib_coeffs))
        assert align > 0.99

    def test_attribute_shapes(self):
        x, cfg, _ = make_snapshots(seed=6)
        est = LiftedDoAEstimator(n_sources=2, grid_angles=cfg.grid_angles,
                                 calib_dim=3, eta=1e-8, noise_sigma=0.0,
                                 max_iters=30000).fit(x)
        assert est.doas_.shape == (2,)
        assert est.calib_.shape == (3,)
        assert est.lifted_.m == 3
        assert 0.0 <= est.rank1_ratio_ <= 1.0


class TestValidation:
    def test_rejects_1d_input(self):
        est = LiftedDoAEstimator(n_sources=1)
        with pytest.raises(ValueError):
            est.fit(np.zeros(8))

    def test_rejects_nonfinite(self):
        est = LiftedDoAEstimator(n_sources=1, calib_dim=2)
        x = np.zeros((4, 6), dtype=complex)
        x[0, 0] = np.nan
        with pytest.raises(ValueError):
            est.fit(x)

    def test_rejects_bad_n_sources(self):
        est = LiftedDoAEstimator(n_sources=0)
        with pytest.raises(ValueError):
            est.fit(np.zeros((4, 8), dtype=complex))

    def test_rejects_calib_dim_too_large(self):
        est = LiftedDoAEstimator(n_sources=1, calib_dim=8)
        with pytest.raises(ValueError):
            est.fit(np.zeros((4, 8), dtype=complex))
