import unittest

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from parameterized import param, parameterized

from fedpowerctl.baselines import (
    BASELINE_COMM_OVERHEAD,
    brute_force_power,
    link_sum_rate,
    max_power,
    wmmse,
    wmmse_iteration,
    wmmse_links,
)
from fedpowerctl.environment import TopologyConfig, build_topology, link_gain_matrix, network_sum_rate, rates
from fedpowerctl.tools.testing import make_interference_gains, make_random_gains


def sum_rate(g: np.ndarray, p: np.ndarray, noise: float) -> float:
    return network_sum_rate(rates(g=g, p=p, noise=noise))


class TestMaxPower(unittest.TestCase):
    def test_every_real_link_at_full_power(self):
        topology = build_topology(TopologyConfig(grid_side=2, users_per_cell=[1, 2, 2, 1]), np.random.default_rng(0))

        allocation = max_power(topology, P_max=6.31)

        assert_array_equal(allocation[topology.user_mask], 6.31)
        assert_array_equal(allocation[~topology.user_mask], 0.0)

    def test_nonpositive_budget(self):
        topology = build_topology(TopologyConfig(grid_side=1, users_per_cell=1), np.random.default_rng(0))

        with self.assertRaisesRegex(ValueError, "'P_max' must be positive!"):
            max_power(topology, P_max=0.0)


class TestWmmse(unittest.TestCase):
    def test_single_link(self):
        g = np.full(shape=(1, 1, 1), fill_value=0.3)

        assert_allclose(wmmse(g, P_max=2.0, noise=0.1), [[2.0]], rtol=1e-12)

    def test_decoupled_links(self):
        g, user_mask = make_interference_gains(direct=1.0, cross=0.0, n_cells=5)

        assert_allclose(wmmse(g, P_max=1.5, noise=0.1, user_mask=user_mask), np.full((5, 1), 1.5), rtol=1e-12)

    def test_matches_grid_search_on_symmetric_pair(self):
        g, _ = make_interference_gains(direct=1.0, cross=0.1)

        allocation = wmmse(g, P_max=1.0, noise=0.1)
        _, best_rate = brute_force_power(g, noise=0.1, P_max=1.0, grid_points=101)

        assert abs(sum_rate(g, allocation, noise=0.1) - best_rate) < 0.05

    def test_symmetric_start_stays_symmetric(self):
        # The on/off optimum of this instance is out of reach of a symmetric full-power start.
        g, _ = make_interference_gains(direct=1.0, cross=0.5)

        allocation = wmmse(g, P_max=1.0, noise=0.1)
        _, best_rate = brute_force_power(g, noise=0.1, P_max=1.0, grid_points=101)

        assert allocation[0, 0] == allocation[1, 0]
        assert sum_rate(g, allocation, noise=0.1) <= best_rate + 1e-9

    def test_monotone_objective(self):
        rng = np.random.default_rng(0)
        for instance in range(100):
            n_cells = int(rng.integers(2, 10))
            g, user_mask = make_random_gains(n_cells=n_cells, random_seed=instance)
            state = wmmse_links(link_gain_matrix(g, user_mask), P_max=1.0, noise=0.1)

            assert np.all(np.diff(state.objective_trace) >= -1e-9)
            assert np.all(state.v >= 0) and np.all(state.v <= 1.0)
            assert np.all(state.w >= 1.0)

    def test_fixed_point(self):
        g, user_mask = make_random_gains(n_cells=4, random_seed=3)
        G = link_gain_matrix(g, user_mask)
        state = wmmse_links(G, P_max=1.0, noise=0.1, tol=1e-5)
        assert state.converged

        v_next, _, _ = wmmse_iteration(G, v=state.v, P_max=1.0, noise=0.1)

        assert np.max(np.abs(v_next - state.v)) < 1e-5

    def test_beats_max_power_on_dense_instances(self):
        wins = 0
        for instance in range(200):
            g, user_mask = make_random_gains(n_cells=6, random_seed=1000 + instance)
            allocation = wmmse(g, P_max=1.0, noise=0.1, user_mask=user_mask)
            wins += sum_rate(g, allocation, noise=0.1) >= sum_rate(g, np.ones(shape=(6, 1)), noise=0.1)

        assert wins >= 180

    def test_close_to_grid_search_on_small_instances(self):
        close = 0
        for instance in range(200):
            n_cells, grid_points = (2, 101) if instance % 2 == 0 else (3, 21)
            g, user_mask = make_random_gains(n_cells=n_cells, random_seed=2000 + instance)
            allocation = wmmse(g, P_max=1.0, noise=0.1, user_mask=user_mask)
            _, best_rate = brute_force_power(g, noise=0.1, P_max=1.0, grid_points=grid_points)
            close += sum_rate(g, allocation, noise=0.1) >= best_rate - 0.05

        assert close >= 160

    def test_powers_stay_in_budget(self):
        for instance in range(20):
            g, user_mask = make_random_gains(n_cells=3, users_per_cell=[1, 2, 3], random_seed=instance)
            allocation = wmmse(g, P_max=0.7, noise=0.2, user_mask=user_mask)

            assert np.all(allocation >= 0) and np.all(allocation <= 0.7)
            assert_array_equal(allocation[~user_mask], 0.0)

    def test_iteration_budget_warning(self):
        g, user_mask = make_random_gains(n_cells=5, random_seed=0)

        with pytest.warns(UserWarning, match="WMMSE did not converge within 1 iterations"):
            state = wmmse_links(link_gain_matrix(g, user_mask), P_max=1.0, noise=0.1, tol=1e-12, max_iter=1)

        assert not state.converged
        assert link_sum_rate(link_gain_matrix(g, user_mask), state.powers, 0.1) == max(state.objective_trace)

    def test_invalid_arguments(self):
        with self.assertRaisesRegex(ValueError, "'tol' must be positive!"):
            wmmse_links(np.ones((2, 2)), P_max=1.0, noise=0.1, tol=0.0)
        with self.assertRaisesRegex(ValueError, "The link gain matrix must be square!"):
            wmmse_links(np.ones((2, 3)), P_max=1.0, noise=0.1)


class TestBruteForce(unittest.TestCase):
    def test_single_link(self):
        allocation, _ = brute_force_power(np.ones(shape=(1, 1, 1)), noise=0.1, P_max=2.0, grid_points=5)

        assert_array_equal(allocation, [[2.0]])

    def test_zero_direct_gains(self):
        g, _ = make_interference_gains(direct=0.0, cross=0.3, n_cells=3)

        allocation, best_rate = brute_force_power(g, noise=0.1, P_max=1.0, grid_points=4)

        assert best_rate == 0.0
        assert_array_equal(allocation, 0.0)

    def test_strong_interference_is_on_off(self):
        g, _ = make_interference_gains(direct=1.0, cross=10.0)

        allocation, best_rate = brute_force_power(g, noise=0.01, P_max=1.0, grid_points=11)

        assert_array_equal(allocation, [[0.0], [1.0]])
        assert best_rate == pytest.approx(np.log2(101.0))

    def test_dominates_max_power(self):
        g, user_mask = make_random_gains(n_cells=3, random_seed=8)

        _, best_rate = brute_force_power(g, noise=0.1, P_max=1.0, grid_points=21, user_mask=user_mask)

        assert best_rate >= sum_rate(g, np.ones(shape=(3, 1)), noise=0.1) - 1e-12

    @parameterized.expand([param(n_cells=5, grid_points=3), param(n_cells=2, grid_points=1)])
    def test_invalid_problems(self, n_cells, grid_points):
        g, _ = make_interference_gains(direct=1.0, cross=0.1, n_cells=n_cells)

        with self.assertRaises(ValueError):
            brute_force_power(g, noise=0.1, P_max=1.0, grid_points=grid_points)


def test_baseline_comm_overhead():
    assert BASELINE_COMM_OVERHEAD == dict(wmmse=1.0, maxpower=0.0)
