import math

import numpy as np
import pytest

from fourstep.distribution import (
    Deterrence,
    DistributionError,
    balance_attractions,
    calibrate_deterrence,
    entropy_of,
    furness_balance,
    mean_trip_cost,
)
from oracles import furness_fixed_point

TWO_ZONE = dict(
    O=np.array([6.0, 4.0]),
    D=np.array([5.0, 5.0]),
    cost=np.array([[1.0, 2.0], [2.0, 1.0]]),
)
# frozen from the standalone alternating-scaling oracle at 1e-13
TWO_ZONE_EXPECTED = np.array(
    [[4.097322696462261, 1.9026773035376798],
     [0.9026773035377381, 3.09732269646232]]
)
TWO_ZONE_MEAN_COST = 1.2805354607075414


class TestDeterrence:
    def test_parse(self):
        d = Deterrence.parse("exp:1.5")
        assert d.form == "exponential" and d.parameter == 1.5
        d = Deterrence.parse("pow:2.0")
        assert d.form == "power" and d.parameter == 2.0
        with pytest.raises(DistributionError):
            Deterrence.parse("nope:1")

    def test_monotone_non_increasing(self):
        c = np.linspace(1, 5000, 50)
        for det in (Deterrence("exponential", 0.01), Deterrence("power", 1.5)):
            f = det(c)
            assert np.all(f > 0)
            assert np.all(np.diff(f) <= 0)

    def test_unreachable_maps_to_zero(self):
        det = Deterrence("exponential", 1.0)
        assert det(np.array([np.inf]))[0] == 0.0

    def test_power_floors_zero_cost(self):
        det = Deterrence("power", 2.0, cost_floor=60.0)
        assert det(np.array([0.0]))[0] == det(np.array([60.0]))[0]


class TestFurnessBalance:
    def test_beta_zero_gives_independence_table(self):
        O = np.array([3.0, 7.0, 2.0])
        D = np.array([4.0, 4.0, 4.0])
        cost = np.ones((3, 3))
        od = furness_balance(O, D, cost, Deterrence("exponential", 0.0))
        expected = np.outer(O, D) / O.sum()
        np.testing.assert_allclose(od.trips, expected, atol=1e-10)

    def test_single_zone_forced(self):
        od = furness_balance(
            np.array([10.0]), np.array([10.0]), np.array([[60.0]]),
            Deterrence("exponential", 0.01),
        )
        assert od.trips[0, 0] == pytest.approx(10.0, abs=1e-10)

    def test_matches_independent_oracle(self):
        od = furness_balance(
            TWO_ZONE["O"], TWO_ZONE["D"], TWO_ZONE["cost"],
            Deterrence("exponential", 1.0), tol=1e-12,
        )
        np.testing.assert_allclose(od.trips, TWO_ZONE_EXPECTED, atol=1e-8)
        oracle = furness_fixed_point(
            TWO_ZONE["O"], TWO_ZONE["D"], np.exp(-TWO_ZONE["cost"])
        )
        np.testing.assert_allclose(od.trips, oracle, atol=1e-8)

    def test_marginals_satisfied(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = rng.integers(2, 8)
            O = rng.uniform(1, 20, n)
            D = rng.uniform(1, 20, n)
            D *= O.sum() / D.sum()
            cost = rng.uniform(60, 1200, (n, n))
            od = furness_balance(O, D, cost, Deterrence("exponential", 0.002))
            assert od.converged
            np.testing.assert_allclose(od.row_sums(), O, atol=1e-8)
            np.testing.assert_allclose(od.col_sums(), D, atol=1e-8)

    def test_zero_production_row_is_zero(self):
        O = np.array([0.0, 10.0])
        D = np.array([5.0, 5.0])
        od = furness_balance(O, D, np.ones((2, 2)), Deterrence("exponential", 0.1))
        np.testing.assert_allclose(od.trips[0], 0.0)

    def test_infeasible_structure_rejected(self):
        O = np.array([5.0, 5.0])
        D = np.array([10.0, 0.0])
        cost = np.array([[60.0, 60.0], [np.inf, 60.0]])
        # zone 1 can only reach destination 1, which has zero attraction
        with pytest.raises(DistributionError, match="no reachable"):
            furness_balance(O, D, cost, Deterrence("exponential", 0.01))

    def test_unbalanced_marginals_rejected(self):
        with pytest.raises(DistributionError, match="unbalanced"):
            furness_balance(
                np.array([5.0]), np.array([6.0]), np.array([[60.0]]),
                Deterrence("exponential", 0.01),
            )

    def test_balance_attractions_rescales(self):
        O, D = balance_attractions(np.array([4.0, 6.0]), np.array([1.0, 3.0]))
        assert D.sum() == pytest.approx(10.0)

    def test_cost_scaling_invariance(self):
        k = 7.0
        od1 = furness_balance(
            TWO_ZONE["O"], TWO_ZONE["D"], TWO_ZONE["cost"],
            Deterrence("exponential", 1.0), tol=1e-12,
        )
        od2 = furness_balance(
            TWO_ZONE["O"], TWO_ZONE["D"], TWO_ZONE["cost"] * k,
            Deterrence("exponential", 1.0 / k), tol=1e-12,
        )
        np.testing.assert_allclose(od1.trips, od2.trips, atol=1e-9)

    def test_balancing_factor_normalization(self):
        od = furness_balance(
            TWO_ZONE["O"], TWO_ZONE["D"], TWO_ZONE["cost"],
            Deterrence("exponential", 1.0), tol=1e-12,
        )
        assert float(od.a_factors @ TWO_ZONE["O"]) == pytest.approx(
            TWO_ZONE["O"].sum(), abs=1e-9
        )

    def test_non_convergence_flagged(self):
        od = furness_balance(
            TWO_ZONE["O"], TWO_ZONE["D"], TWO_ZONE["cost"],
            Deterrence("exponential", 1.0), tol=1e-15, max_iter=2,
        )
        assert not od.converged


class TestEntropy:
    def test_all_zero(self):
        assert entropy_of(np.zeros((3, 3))) == 0.0

    def test_single_unit_cell(self):
        assert entropy_of(np.array([[1.0]])) == 0.0

    def test_uniform_twos(self):
        assert entropy_of(np.full((2, 2), 2.0)) == pytest.approx(
            -8 * math.log(2), abs=1e-12
        )

    def test_negative_rejected(self):
        with pytest.raises(DistributionError):
            entropy_of(np.array([[-1.0]]))


class TestEntropyOptimality:
    def test_gravity_maximizes_penalized_entropy_vs_grid(self):
        # grid search over the 4-dim feasible polytope of 3x3 matrices with
        # fixed marginals; the gravity solution must score at least as high
        # on S - beta * sum(T c) as every grid point
        rng = np.random.default_rng(77)
        for trial in range(3):
            O = rng.uniform(0.2, 0.5, 3)
            D = rng.uniform(0.2, 0.5, 3)
            D *= O.sum() / D.sum()
            cost = rng.uniform(0.5, 2.0, (3, 3))
            beta = 1.0
            od = furness_balance(O, D, cost, Deterrence("exponential", beta), tol=1e-13)

            def objective(T):
                pos = T > 0
                return -(T[pos] * np.log(T[pos])).sum() - beta * (T * cost).sum()

            best_grid = -np.inf
            step = 0.01
            a_max, b_max = O[0], O[1]
            for t00 in np.arange(0, a_max + step, step):
                for t01 in np.arange(0, a_max - t00 + step, step):
                    t02 = O[0] - t00 - t01
                    if t02 < -1e-12:
                        continue
                    for t10 in np.arange(0, b_max + step, step):
                        for t11 in np.arange(0, b_max - t10 + step, step):
                            t12 = O[1] - t10 - t11
                            t20 = D[0] - t00 - t10
                            t21 = D[1] - t01 - t11
                            t22 = O[2] - t20 - t21
                            if min(t12, t20, t21, t22) < -1e-12:
                                continue
                            T = np.array(
                                [[t00, t01, max(t02, 0)],
                                 [t10, t11, max(t12, 0)],
                                 [max(t20, 0), max(t21, 0), max(t22, 0)]]
                            )
                            best_grid = max(best_grid, objective(T))
            assert objective(od.trips) >= best_grid - 1e-9


class TestCalibration:
    def test_uniform_cost_returns_zero_beta(self):
        O = np.array([4.0, 6.0])
        D = np.array([5.0, 5.0])
        cost = np.full((2, 2), 300.0)
        det = calibrate_deterrence(O, D, cost, "exponential", 300.0)
        assert det.parameter == 0.0

    def test_round_trip_recovers_beta(self):
        det = calibrate_deterrence(
            TWO_ZONE["O"], TWO_ZONE["D"], TWO_ZONE["cost"],
            "exponential", TWO_ZONE_MEAN_COST,
        )
        assert det.parameter == pytest.approx(1.0, abs=1e-4)

    def test_calibrate_back_to_beta_zero(self):
        od0 = furness_balance(
            TWO_ZONE["O"], TWO_ZONE["D"], TWO_ZONE["cost"],
            Deterrence("exponential", 0.0), tol=1e-12,
        )
        target = mean_trip_cost(od0.trips, TWO_ZONE["cost"])
        det = calibrate_deterrence(
            TWO_ZONE["O"], TWO_ZONE["D"], TWO_ZONE["cost"], "exponential", target
        )
        assert det.parameter == pytest.approx(0.0, abs=1e-6)

    def test_target_above_achievable_rejected(self):
        with pytest.raises(DistributionError, match="achievable"):
            calibrate_deterrence(
                TWO_ZONE["O"], TWO_ZONE["D"], TWO_ZONE["cost"], "exponential", 10.0
            )

    def test_mean_cost_monotone_in_beta(self):
        costs = []
        for beta in (0.0, 0.5, 1.0, 2.0, 4.0):
            od = furness_balance(
                TWO_ZONE["O"], TWO_ZONE["D"], TWO_ZONE["cost"],
                Deterrence("exponential", beta), tol=1e-12,
            )
            costs.append(mean_trip_cost(od.trips, TWO_ZONE["cost"]))
        assert all(b <= a + 1e-12 for a, b in zip(costs, costs[1:]))
