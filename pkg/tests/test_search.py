import math

import numpy as np
import pytest

from helpers import QuadraticProblem
from rmom.problems import RayleighProblem
from rmom.search import (
    SearchConfig,
    SearchError,
    golden_section,
    search_geodesic,
    verify_conditions,
)


class TestGoldenSection:
    def test_interior_quadratic(self):
        beta, _ = golden_section(lambda t: (t - 0.3) ** 2, SearchConfig(max_iters=20))
        assert abs(beta - 0.3) <= 1e-4

    def test_increasing_returns_left_endpoint(self):
        beta, _ = golden_section(lambda t: t, SearchConfig(max_iters=8))
        assert beta == 0.0

    def test_decreasing_returns_right_endpoint(self):
        beta, _ = golden_section(lambda t: -t, SearchConfig(max_iters=8))
        assert beta == 1.0

    def test_constant_prefers_first_candidate(self):
        beta, _ = golden_section(lambda t: 1.0, SearchConfig(max_iters=8))
        assert beta == 0.0

    @pytest.mark.parametrize("iters", [1, 4, 8, 10, 16])
    def test_eval_budget(self, iters):
        count = 0

        def phi(t):
            nonlocal count
            count += 1
            return (t - 0.4) ** 2

        cfg = SearchConfig(max_iters=iters, bracket_tol=1e-18)
        _, evals = golden_section(phi, cfg)
        assert evals == count
        assert evals <= iters + 3

    def test_bracket_shrink_rate(self):
        # after n shrinks the best point is within invphi^n of an interior minimum
        for iters in (8, 12, 20):
            beta, _ = golden_section(
                lambda t: (t - 0.41) ** 2, SearchConfig(max_iters=iters, bracket_tol=1e-18)
            )
            assert abs(beta - 0.41) <= 0.619**iters + 1e-12

    def test_nonfinite_aborts(self):
        with pytest.raises(SearchError, match="non-finite"):
            golden_section(lambda t: math.inf if t > 0.5 else 0.0, SearchConfig())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SearchConfig(max_iters=0)
        with pytest.raises(ValueError):
            SearchConfig(eps_tilde=-1.0)


class TestSearchGeodesic:
    def test_degenerate_segment(self):
        prob = QuadraticProblem([1.0, 2.0])
        x = np.array([0.3, -0.2])
        res = search_geodesic(prob, x, x, SearchConfig())
        assert np.array_equal(res.y, x)
        assert res.f_y == prob.value(x)

    def test_symmetric_quadratic_midpoint(self):
        prob = QuadraticProblem([1.0])
        v, x = np.array([-1.0]), np.array([1.0])
        res = search_geodesic(prob, v, x, SearchConfig(max_iters=25, bracket_tol=1e-18))
        assert abs(res.y[0]) <= 1e-4

    def test_descent_conditions_hold_exactly(self):
        prob = QuadraticProblem([3.0, 1.0])
        rng = np.random.default_rng(0)
        for _ in range(25):
            v = rng.standard_normal(2)
            x = rng.standard_normal(2)
            res = search_geodesic(prob, v, x, SearchConfig())
            assert res.f_y <= prob.value(x)
            assert res.f_y <= prob.value(v)

    def test_rayleigh_endpoint_winner_is_exact_point(self):
        # with x at the dominant eigenvector, f decreases along the whole
        # segment toward x; a grid scan is the oracle for the argmin
        prob = RayleighProblem(np.diag([3.0, 2.0, 1.0]))
        man = prob.manifold
        x = np.array([1.0, 0.0, 0.0])
        v = np.array([1.0, 0.5, 0.0])
        v = v / np.linalg.norm(v)
        u = man.log(v, x)
        grid = np.linspace(0.0, 1.0, 1001)
        vals = [prob.value(man.exp(v, t * u)) for t in grid]
        assert int(np.argmin(vals)) == len(grid) - 1
        res = search_geodesic(prob, v, x, SearchConfig(max_iters=8))
        assert res.beta == 1.0
        assert np.array_equal(res.y, x)
        assert res.f_y == prob.value(x)

    def test_interior_result_matches_reconstruction(self):
        prob = QuadraticProblem([1.0, 4.0])
        man = prob.manifold
        v, x = np.array([-1.0, 0.5]), np.array([1.0, 0.25])
        res = search_geodesic(prob, v, x, SearchConfig(max_iters=12))
        rebuilt = man.exp(v, res.beta * man.log(v, x))
        assert np.linalg.norm(res.y - rebuilt) <= 1e-12


class TestVerifyConditions:
    def test_left_endpoint_margin_exactly_zero(self):
        prob = QuadraticProblem([1.0, 2.0])
        v = np.array([0.5, 0.5])
        x = np.array([1.0, -1.0])
        cond1, margin = verify_conditions(prob, v, x, v, eps_tilde=0.0)
        assert margin == 0.0

    def test_right_endpoint_margin_nonnegative(self):
        # f increasing from x toward v: the one-sided stationarity sign
        prob = QuadraticProblem([1.0])
        x = np.array([0.1])
        v = np.array([1.0])
        cond1, margin = verify_conditions(prob, x, x, v, eps_tilde=0.0)
        assert cond1
        assert margin >= 0.0

    def test_exact_interior_minimizer_margin_vanishes(self):
        prob = QuadraticProblem([1.0, 1.0])
        v = np.array([-1.0, 0.3])
        x = np.array([1.0, 0.3])
        u = x - v
        # minimizer of f(v + t u) in closed form
        t_star = -float(v @ (prob.q * u)) / float(u @ (prob.q * u))
        y = v + t_star * u
        _, margin = verify_conditions(prob, y, x, v, eps_tilde=0.0)
        assert abs(margin) <= 1e-9

    def test_achieved_margin_within_search_budget_on_benchmark(self):
        # the stationarity defect stays within L * D * invphi^iters on a
        # dominant-eigenvector run with the default search budget
        from rmom.certifier import rayleigh_witness
        from rmom.curvature import CurvatureConstants
        from rmom.optimizers import OptConfig, run_ragdsdr

        prob = RayleighProblem(np.diag(np.linspace(1.0, 4.0, 25)))
        man = prob.manifold
        rng = np.random.default_rng(8)
        wit = rayleigh_witness(prob)
        while True:
            x0 = man.random_point(rng)
            if man.dist(x0, wit.x_star) <= math.pi / 2 - 0.05:
                break
        diameter = math.pi / 2
        gs = 10
        cfg = OptConfig(
            lipschitz=prob.lipschitz,
            curvature=CurvatureConstants.from_bounds(man.curvature_bounds(diameter)),
            search_cfg=SearchConfig(max_iters=gs),
            max_iters=80,
            grad_tol=0.0,
        )
        trace = run_ragdsdr(prob, x0, cfg)
        budget = prob.lipschitz * diameter * 0.618**gs
        assert all(r.cond2_margin >= -budget for r in trace.rows)
        assert all(
            np.isfinite([r.f_x, r.f_y, r.grad_norm_y, r.beta, r.a_next,
                         r.big_a, r.cond2_margin, r.dist_x0]).all()
            for r in trace.rows
        )
