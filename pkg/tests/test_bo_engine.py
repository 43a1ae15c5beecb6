import numpy as np
import pytest

from boss.bo_engine import (
    BoConfig,
    RunLedger,
    SearchSpace,
    SurrogateFn,
    default_initial_points,
    gamma_t,
    maximize_af,
    run_boss,
    ucb,
    ucb_batch,
)
from boss.errors import EvaluationError
from boss.surrogate_gp import DesignSet, SeKernelParams, condition


def make_gp(points, values, params=None, offset=0.0):
    design = DesignSet(points=points, values=values, center_offset=offset)
    return condition(params or SeKernelParams(1.0, 1.0, 1e-6), design)


class TestSearchSpace:
    def test_validation(self):
        with pytest.raises(ValueError):
            SearchSpace(lower=[1.0], upper=[0.0])
        with pytest.raises(ValueError):
            SearchSpace(lower=[0.0] * 4, upper=[1.0] * 4)

    def test_diameter_and_contains(self):
        space = SearchSpace(lower=[0.0, 0.0], upper=[3.0, 4.0])
        assert space.diameter == 5.0
        assert space.contains([1.0, 1.0])
        assert not space.contains([1.0, 5.0])


class TestUcb:
    def test_gamma_values(self):
        np.testing.assert_allclose(gamma_t(1, 0.1), 2 * np.log(np.pi**2 / 0.6))
        assert abs(gamma_t(1, 0.1) - 5.60075) < 1e-4
        assert abs(gamma_t(10, 0.1) - 14.8110) < 1e-3

    def test_value_at_prior_point(self):
        # far from the design the GP reverts to mean 0, variance 1
        gp = make_gp([[0.0]], [0.0])
        got = ucb(gp, t=1, delta=0.1, query=[500.0])
        np.testing.assert_allclose(got, np.sqrt(gamma_t(1, 0.1)), atol=1e-6)
        assert abs(got - 2.36659) < 1e-4

    def test_no_exploration_at_training_point(self):
        gp = make_gp([[2.0]], [7.0], offset=7.0)
        mean = 7.0
        got = ucb(gp, t=3, delta=0.1, query=[2.0])
        assert abs(got - mean) <= np.sqrt(gamma_t(3, 0.1)) * 2e-6

    def test_sd_variant(self):
        gp = make_gp([[0.0]], [0.0], params=SeKernelParams(1.0, 2.0, 1e-6))
        far = np.array([[500.0]])
        var_form = ucb_batch(gp, 2, 0.1, far)[0]
        sd_form = ucb_batch(gp, 2, 0.1, far, use_sd=True)[0]
        np.testing.assert_allclose(var_form, np.sqrt(gamma_t(2, 0.1)) * 4.0, atol=1e-5)
        np.testing.assert_allclose(sd_form, np.sqrt(gamma_t(2, 0.1)) * 2.0, atol=1e-5)


class TestMaximizeAf:
    def test_explores_away_from_lone_design_point(self):
        space = SearchSpace(lower=[0.0], upper=[10.0])
        gp = make_gp([[5.0]], [0.0], params=SeKernelParams(1.0, 3.0, 1e-6))
        rng = np.random.default_rng(0)
        best = maximize_af(gp, t=1, delta=0.1, space=space, budget=512, rng=rng)
        assert abs(best[0] - 5.0) >= 0.1 * space.diameter

    def test_dominates_endpoints(self):
        space = SearchSpace(lower=[0.0], upper=[10.0])
        gp = make_gp([[5.0]], [1.0])
        rng = np.random.default_rng(1)
        best = maximize_af(gp, t=1, delta=0.1, space=space, budget=256, rng=rng)
        af_best = ucb(gp, 1, 0.1, best)
        for endpoint in ([0.0], [10.0]):
            assert af_best >= ucb(gp, 1, 0.1, endpoint) - 1e-12

    def test_budget_one(self):
        space = SearchSpace(lower=[0.0], upper=[10.0])
        gp = make_gp([[5.0]], [0.0])
        best = maximize_af(gp, 1, 0.1, space, budget=1, rng=np.random.default_rng(2))
        assert space.contains(best)

    def test_result_in_box_2d(self):
        space = SearchSpace(lower=[0.0, -1.0], upper=[2.0, 1.0])
        gp = make_gp([[1.0, 0.0]], [0.0])
        best = maximize_af(gp, 1, 0.05, space, budget=128, rng=np.random.default_rng(3))
        assert space.contains(best)


class TestRunBoss:
    def test_loop_structure(self):
        calls = []

        def objective(alpha):
            calls.append(float(alpha[0]))
            return -float(alpha[0] - 3.0) ** 2

        space = SearchSpace(lower=[0.0], upper=[10.0])
        cfg = BoConfig(iterations=3, initial_points=[[2.0]], seed=0)
        design, surrogate, ledger = run_boss(objective, space, cfg)
        assert len(design) == 3
        assert design.points[0, 0] == 2.0
        assert ledger.eval_count == 3
        assert len(calls) == 3
        assert [row.iteration for row in ledger.rows] == [1, 2, 3]

    def test_initials_consumed_in_order(self):
        space = SearchSpace(lower=[0.0], upper=[10.0])
        initials = [[1.0], [9.0], [4.0]]
        cfg = BoConfig(iterations=5, initial_points=initials, seed=3)
        design, _, ledger = run_boss(lambda a: float(np.sin(a[0])), space, cfg)
        np.testing.assert_array_equal(design.points[:3], np.array(initials))
        for row, expected in zip(ledger.rows[:3], initials):
            np.testing.assert_array_equal(row.alpha, expected)

    def test_finds_global_max_of_alpha_sin_alpha(self):
        # oracle: dense grid scan of the objective
        grid = np.linspace(0.0, 10.0, 1_000_001)
        oracle_max = np.max(grid * np.sin(grid))
        space = SearchSpace(lower=[0.0], upper=[10.0])
        cfg = BoConfig(
            iterations=30,
            initial_points=default_initial_points(space, 3),
            seed=7,
            delta=0.01,
        )
        design, _, _ = run_boss(lambda a: float(a[0] * np.sin(a[0])), space, cfg)
        assert oracle_max - design.values.max() <= 0.05

    def test_constant_objective_produces_distinct_points(self):
        space = SearchSpace(lower=[0.0], upper=[1.0])
        cfg = BoConfig(iterations=12, initial_points=[[0.5]], seed=5)
        design, surrogate, _ = run_boss(lambda a: 2.0, space, cfg)
        assert design.min_pairwise_distance() >= 1e-10
        probe = np.linspace(0, 1, 64)[:, None]
        np.testing.assert_allclose(surrogate(probe), 2.0, atol=1e-3)

    def test_surrogate_interpolates_design(self):
        space = SearchSpace(lower=[0.0], upper=[10.0])
        cfg = BoConfig(iterations=15, initial_points=[[0.0], [5.0], [10.0]], seed=11)
        design, surrogate, _ = run_boss(lambda a: float(np.cos(a[0])), space, cfg)
        fitted = surrogate(design.points)
        assert np.max(np.abs(fitted - design.values)) <= 10 * np.sqrt(1e-6)

    def test_determinism(self):
        space = SearchSpace(lower=[0.0], upper=[10.0])

        def objective(alpha):
            return float(np.log1p(alpha[0]) * np.sin(2 * alpha[0]))

        runs = []
        for _ in range(2):
            cfg = BoConfig(iterations=20, initial_points=[[1.0], [9.0]], seed=123)
            design, _, ledger = run_boss(objective, space, cfg)
            runs.append((design.points.copy(), design.values.copy(), ledger))
        np.testing.assert_array_equal(runs[0][0], runs[1][0])
        np.testing.assert_array_equal(runs[0][1], runs[1][1])

    def test_budget_accounting_and_bounds(self):
        space = SearchSpace(lower=[0.0, 0.0], upper=[1.0, 2.0])
        cfg = BoConfig(
            iterations=9,
            initial_points=default_initial_points(space, 4, seed=1),
            seed=2,
        )
        design, _, ledger = run_boss(
            lambda a: -float(np.sum((a - 0.5) ** 2)), space, cfg
        )
        assert ledger.eval_count == 9
        assert ledger.rows[-1].cumulative_evals == 9
        for point in design.points:
            assert space.contains(point)

    def test_non_finite_objective_aborts_with_point(self):
        space = SearchSpace(lower=[0.0], upper=[10.0])
        cfg = BoConfig(iterations=3, initial_points=[[2.0]], seed=0)
        with pytest.raises(EvaluationError) as err:
            run_boss(lambda a: np.nan, space, cfg)
        assert err.value.point is not None

    def test_iterations_below_initials_rejected(self):
        with pytest.raises(ValueError):
            BoConfig(iterations=2, initial_points=[[0.0], [1.0], [2.0]])

    def test_refresh_recorded(self):
        space = SearchSpace(lower=[0.0], upper=[10.0])
        cfg = BoConfig(
            iterations=12, initial_points=[[0.0], [5.0], [10.0]], seed=0, refresh_every=5
        )
        _, _, ledger = run_boss(lambda a: float(np.sin(a[0])), space, cfg)
        refresh_iters = [it for it, _, _ in ledger.refreshes]
        assert refresh_iters == [5, 10]
        flagged = [row.iteration for row in ledger.rows if row.refresh_flag]
        assert flagged == [5, 10]


class TestLedgerCsv:
    def test_columns_and_roundtrip(self, tmp_path):
        space = SearchSpace(lower=[0.0, 0.0], upper=[1.0, 1.0])
        cfg = BoConfig(iterations=4, initial_points=[[0.2, 0.2], [0.8, 0.8]], seed=0)
        _, _, ledger = run_boss(lambda a: float(a[0] + a[1]), space, cfg)
        path = tmp_path / "design.csv"
        ledger.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "iter,alpha_1,alpha_2,f_value,cumulative_evals,wall_ms,refresh_flag"
        assert len(lines) == 5


class TestDefaultInitials:
    def test_one_dim_equally_spaced(self):
        space = SearchSpace(lower=[0.0], upper=[10.0])
        pts = default_initial_points(space, 3)
        np.testing.assert_allclose(pts.ravel(), [0.0, 5.0, 10.0])

    def test_latin_square_2d(self):
        space = SearchSpace(lower=[0.0, 0.0], upper=[1.0, 1.0])
        pts = default_initial_points(space, 5, seed=4)
        assert pts.shape == (5, 2)
        for dim in range(2):
            strata = np.floor(pts[:, dim] * 5).astype(int)
            assert sorted(strata) == [0, 1, 2, 3, 4]
