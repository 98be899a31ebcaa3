import numpy as np
import pytest

from liftdoa.groups import GroupStructure, group_norm, prox_group_l21


def rng_vec(rng, g):
    return rng.standard_normal(g.n_coords) + 1j * rng.standard_normal(g.n_coords)


class TestPartition:
    @pytest.mark.parametrize("mode", ["grid", "row", "elementwise"])
    def test_groups_partition_coordinates(self, mode):
        g = GroupStructure(mode=mode, m=3, L=2, N=4)
        idx = g.indices()
        assert len(idx) == g.num_groups
        stacked = np.concatenate(idx)
        assert stacked.size == g.n_coords
        assert np.array_equal(np.sort(stacked), np.arange(g.n_coords))

    @pytest.mark.parametrize("mode", ["grid", "row", "elementwise"])
    def test_norms_match_index_sets(self, mode):
        # the reshape fast path must agree with the literal index-set route
        rng = np.random.default_rng(0)
        g = GroupStructure(mode=mode, m=3, L=2, N=5)
        v = rng_vec(rng, g)
        direct = np.array([np.linalg.norm(v[ix]) for ix in g.indices()])
        np.testing.assert_allclose(g.norms(v), direct, atol=1e-13)

    def test_grid_group_collects_one_grid_point(self):
        g = GroupStructure(mode="grid", m=2, L=3, N=4)
        xt = np.zeros((2, 12), dtype=complex)
        for l in range(3):
            xt[:, l * 4 + 1] = 1.0  # grid point j=1, all snapshots
        norms = g.norms(xt.ravel(order="F"))
        np.testing.assert_allclose(norms, [0.0, np.sqrt(6.0), 0.0, 0.0])

    def test_invalid_mode(self):
        with pytest.raises(ValueError):
            GroupStructure(mode="diag", m=2, L=2, N=2)


class TestGroupNorm:
    def test_zero(self):
        g = GroupStructure(mode="grid", m=2, L=2, N=3)
        assert group_norm(np.zeros(12, dtype=complex), g) == 0.0

    def test_row_mode_literal_345(self):
        g = GroupStructure(mode="row", m=2, L=1, N=2)
        xt = np.array([[3.0, 4.0], [0.0, 0.0]], dtype=complex)
        assert group_norm(xt, g) == pytest.approx(5.0)

    def test_dominates_nuclear_norm(self):
        # relaxation premise: l2,1 >= nuclear for random matrices, both modes
        rng = np.random.default_rng(1)
        for _ in range(20):
            m, l, n = 3, 2, 12
            xt = rng.standard_normal((m, l * n)) + 1j * rng.standard_normal((m, l * n))
            nuc = np.linalg.svd(xt, compute_uv=False).sum()
            for mode in ("grid", "row"):
                g = GroupStructure(mode=mode, m=m, L=l, N=n)
                assert group_norm(xt, g) + 1e-12 >= nuc

    def test_accepts_matrix_and_vector(self):
        rng = np.random.default_rng(2)
        g = GroupStructure(mode="grid", m=2, L=2, N=3)
        xt = rng.standard_normal((2, 6)) + 1j * rng.standard_normal((2, 6))
        assert group_norm(xt, g) == pytest.approx(group_norm(xt.ravel(order="F"), g))


class TestProx:
    def test_exact_threshold_zeroes_group(self):
        # the [3, 4] group has norm 5, equal to the threshold
        g = GroupStructure(mode="grid", m=2, L=1, N=1)
        out = prox_group_l21(np.array([3.0 + 0j, 4.0]), g, 5.0)
        np.testing.assert_allclose(out, [0.0, 0.0])

    def test_partial_shrinkage(self):
        g = GroupStructure(mode="grid", m=2, L=1, N=1)
        out = prox_group_l21(np.array([3.0 + 0j, 4.0]), g, 2.5)
        np.testing.assert_allclose(out, [1.5, 2.0])

    def test_zero_threshold_is_identity(self):
        rng = np.random.default_rng(3)
        g = GroupStructure(mode="row", m=3, L=2, N=2)
        v = rng_vec(rng, g)
        np.testing.assert_array_equal(prox_group_l21(v, g, 0.0), v)

    @pytest.mark.parametrize("mode", ["grid", "row", "elementwise"])
    def test_nonexpansive(self, mode):
        rng = np.random.default_rng(4)
        g = GroupStructure(mode=mode, m=3, L=2, N=4)
        for _ in range(20):
            u = rng_vec(rng, g)
            v = rng_vec(rng, g)
            tau = float(rng.uniform(0.0, 2.0))
            d_out = np.linalg.norm(g.prox(u, tau) - g.prox(v, tau))
            assert d_out <= np.linalg.norm(u - v) + 1e-12

    def test_prox_solves_per_group_problem(self):
        # prox output minimizes tau*||x||_2 + 0.5||x - v||^2 per group,
        # checked against a grid search over radial scalings
        rng = np.random.default_rng(5)
        g = GroupStructure(mode="grid", m=2, L=2, N=1)
        v = rng_vec(rng, g)
        tau = 0.8
        out = g.prox(v, tau)

        def cost(x):
            return tau * np.linalg.norm(x) + 0.5 * np.linalg.norm(x - v) ** 2

        best = min(cost(s * v) for s in np.linspace(0, 1, 20001))
        assert cost(out) <= best + 1e-9
