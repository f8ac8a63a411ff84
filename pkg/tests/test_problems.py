import json
import math

import numpy as np
import pytest

from helpers import check_gradient_fd
from rmom.manifolds import ManifoldDomainError
from rmom.problems import (
    GurvitsState,
    KarcherProblem,
    RayleighProblem,
    ScalingProblem,
    ds_distance,
    gen_rayleigh,
    gen_scaling,
    gen_spd_set,
    gurvits_ds,
    gurvits_init,
    gurvits_step,
    instance_from_dict,
    instance_to_dict,
)


class TestRayleigh:
    def test_constant_on_sphere_for_identity(self):
        prob = RayleighProblem(np.eye(4))
        rng = np.random.default_rng(0)
        for _ in range(5):
            x = prob.manifold.random_point(rng)
            assert prob.value(x) == pytest.approx(-0.5, abs=1e-14)
            assert np.allclose(prob.grad(x), 0.0, atol=1e-14)

    def test_axis_values(self):
        prob = RayleighProblem(np.diag([3.0, 1.0]))
        assert prob.value(np.array([1.0, 0.0])) == -1.5
        x = np.array([1.0, 1.0]) / math.sqrt(2.0)
        assert prob.value(x) == pytest.approx(-1.0, abs=1e-14)

    def test_gradient_vanishes_at_eigenvectors(self):
        prob = RayleighProblem(np.diag([3.0, 2.0, 1.0]))
        for i in range(3):
            x = np.zeros(3)
            x[i] = 1.0
            assert np.allclose(prob.grad(x), 0.0, atol=1e-14)

    def test_gradient_points_toward_dominant_eigenvector(self):
        prob = RayleighProblem(np.diag([3.0, 1.0]))
        x = np.array([1.0, 1.0]) / math.sqrt(2.0)
        g = prob.grad(x)
        # descent direction -g has positive first component
        assert -g[0] > 0.0

    def test_gradient_finite_differences(self):
        prob = gen_rayleigh(20, 25, seed=7)
        rng = np.random.default_rng(1)
        for _ in range(5):
            x = prob.manifold.random_point(rng)
            assert check_gradient_fd(prob, x, rng) <= 1e-5

    def test_smoothness_constant(self):
        prob = gen_rayleigh(15, 18, seed=8)
        man = prob.manifold
        rng = np.random.default_rng(2)
        for _ in range(50):
            x = man.random_point(rng)
            y = man.exp(x, 0.3 * man.unit_tangent(rng, x))
            lhs = np.linalg.norm(prob.grad(x) - man.transport(y, x, prob.grad(y)))
            assert lhs <= prob.lipschitz * man.dist(x, y) * (1.0 + 1e-6)

    def test_convexity_inside_spectral_gap_cap(self):
        # the sphere Hessian is x^T A x - u^T A u, nonnegative on the cap
        # cos^2(theta) >= l1/(2 l1 - l2) around the dominant eigenvector
        prob = RayleighProblem(np.diag([3.0, 1.0, 0.8, 0.5]))
        man = prob.manifold
        x_star = np.array([1.0, 0.0, 0.0, 0.0])
        cap = math.acos(math.sqrt(3.0 / 5.0))
        rng = np.random.default_rng(30)
        for _ in range(500):
            pts = [
                man.exp(x_star, rng.uniform(0.0, 0.95 * cap) * man.unit_tangent(rng, x_star))
                for _ in range(2)
            ]
            x, y = pts
            margin = prob.value(y) - prob.value(x) - man.inner(x, prob.grad(x), man.log(x, y))
            assert margin >= -1e-9

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError, match="semidefinite"):
            RayleighProblem(np.diag([1.0, -1.0]))


class TestGenRayleigh:
    def test_deterministic(self):
        a = gen_rayleigh(10, 12, seed=3)
        b = gen_rayleigh(10, 12, seed=3)
        assert np.array_equal(a.a, b.a)

    def test_spectral_fields(self):
        prob = gen_rayleigh(10, 12, seed=3)
        w = np.linalg.eigvalsh(prob.a)
        assert prob.lipschitz == pytest.approx(w[-1])
        assert prob.mu_hint == pytest.approx(max(w[0], 0.0))

    def test_many_samples_well_conditioned(self):
        # n >> d concentrates the spectrum (Marchenko-Pastur)
        prob = gen_rayleigh(10, 10000, seed=4)
        assert prob.mu_hint / prob.lipschitz > 0.8


class TestKarcher:
    def test_single_matrix_minimizer(self):
        rng = np.random.default_rng(5)
        a = gen_spd_set(1, 4, 10.0, seed=5).mats[0]
        prob = KarcherProblem([a])
        assert prob.value(a) == pytest.approx(0.0, abs=1e-18)
        assert np.allclose(prob.grad(a), 0.0, atol=1e-12)

    def test_commuting_pair_geometric_mean(self):
        prob = KarcherProblem([np.diag([1.0, 1.0]), np.diag([4.0, 4.0])])
        mid = np.diag([2.0, 2.0])
        assert np.allclose(prob.grad(mid), 0.0, atol=1e-12)

    def test_gradient_finite_differences(self):
        prob = gen_spd_set(4, 5, 100.0, seed=6)
        rng = np.random.default_rng(6)
        for _ in range(3):
            x = prob.manifold.random_point(rng)
            assert check_gradient_fd(prob, x, rng) <= 1e-5

    def test_geodesic_convexity_spot_check(self):
        prob = gen_spd_set(3, 4, 50.0, seed=9)
        man = prob.manifold
        rng = np.random.default_rng(9)
        for _ in range(1000):
            x = man.random_point(rng, spread=1.5)
            y = man.random_point(rng, spread=1.5)
            margin = prob.value(y) - prob.value(x) - man.inner(x, prob.grad(x), man.log(x, y))
            assert margin >= -1e-9 * max(1.0, abs(prob.value(x)), abs(prob.value(y)))


class TestGenSpdSet:
    def test_condition_number_pinned(self):
        prob = gen_spd_set(20, 20, 1e4, seed=10)
        for a in prob.mats:
            w = np.linalg.eigvalsh(a)
            assert w[-1] / w[0] == pytest.approx(1e4, rel=1e-6)

    def test_cond_one_gives_identity(self):
        prob = gen_spd_set(3, 4, 1.0, seed=11)
        for a in prob.mats:
            assert np.allclose(a, np.eye(4), atol=1e-12)

    def test_deterministic(self):
        a = gen_spd_set(2, 3, 100.0, seed=12)
        b = gen_spd_set(2, 3, 100.0, seed=12)
        for m1, m2 in zip(a.mats, b.mats):
            assert np.array_equal(m1, m2)

    def test_rejects_bad_cond(self):
        with pytest.raises(ValueError, match="cond"):
            gen_spd_set(2, 3, 0.5, seed=0)


class TestCapacity:
    def test_identity_operator_is_flat_zero(self):
        prob = ScalingProblem([np.eye(3)])
        rng = np.random.default_rng(13)
        for _ in range(5):
            x = prob.manifold.random_point(rng)
            assert prob.value(x) == pytest.approx(0.0, abs=1e-10)
            assert np.allclose(prob.grad(x), 0.0, atol=1e-9)

    def test_scale_invariance(self):
        prob = gen_scaling(3, 5, seed=14)
        rng = np.random.default_rng(14)
        x = prob.manifold.random_point(rng)
        assert prob.value(x) == pytest.approx(prob.value(2.0 * x), abs=1e-10)

    def test_gradient_finite_differences(self):
        prob = gen_scaling(3, 5, seed=15)
        rng = np.random.default_rng(15)
        for _ in range(3):
            x = prob.manifold.random_point(rng)
            assert check_gradient_fd(prob, x, rng) <= 1e-5

    def test_geodesic_convexity_spot_check(self):
        prob = gen_scaling(3, 4, seed=16)
        man = prob.manifold
        rng = np.random.default_rng(16)
        for _ in range(1000):
            x = man.random_point(rng, spread=1.0)
            y = man.random_point(rng, spread=1.0)
            margin = prob.value(y) - prob.value(x) - man.inner(x, prob.grad(x), man.log(x, y))
            assert margin >= -1e-9 * max(1.0, abs(prob.value(x)), abs(prob.value(y)))

    def test_singular_argument_rejected(self):
        prob = ScalingProblem([np.eye(2)])
        with pytest.raises(ManifoldDomainError):
            prob.value(np.diag([1.0, 0.0]))


class TestDsDistance:
    def test_doubly_stochastic_is_zero(self):
        prob = ScalingProblem([np.eye(3)])
        assert prob.ds_distance(np.eye(3), np.eye(3)) == pytest.approx(0.0, abs=1e-18)

    def test_hand_computed_residual(self):
        # scaled tuple is sqrt(2) I; both residual traces equal tr(I) = 2
        prob = ScalingProblem([math.sqrt(2.0) * np.eye(2)])
        assert prob.ds_distance(np.eye(2), np.eye(2)) == pytest.approx(4.0, abs=1e-12)

    def test_zero_at_capacity_optimum(self):
        prob = gen_scaling(3, 4, seed=17)
        from rmom.certifier import presolve_witness

        wit = presolve_witness(prob, 1.0, 20000, grad_tol=1e-12)
        assert prob.ds_at(wit.x_star) <= 1e-9


class TestGurvits:
    def test_half_step_normalizations_exact(self):
        prob = gen_scaling(3, 6, seed=18)
        state = gurvits_step(gurvits_init(prob))
        left = sum(a @ a.T for a in state.mats)
        assert np.allclose(left, np.eye(6), atol=1e-12)

    def test_single_scalar_operator_rescales_immediately(self):
        prob = ScalingProblem([2.0 * np.eye(3)])
        state = gurvits_step(gurvits_init(prob))
        assert np.allclose(state.mats[0], np.eye(3), atol=1e-12)

    def test_doubly_stochastic_fixed_point(self):
        prob = ScalingProblem([np.eye(4)])
        state = gurvits_step(gurvits_init(prob))
        assert np.allclose(state.mats[0], np.eye(4), atol=1e-12)
        assert gurvits_ds(state, 4) <= 1e-24

    def test_ds_monotone_nonincreasing(self):
        prob = gen_scaling(3, 10, seed=19)
        state = gurvits_init(prob)
        prev = gurvits_ds(state, 10)
        for _ in range(100):
            state = gurvits_step(state)
            cur = gurvits_ds(state, 10)
            assert cur <= prev + 1e-12
            prev = cur

    def test_not_scalable_detected(self):
        state = GurvitsState([np.zeros((2, 2))], np.eye(2))
        with pytest.raises(ManifoldDomainError, match="not scalable"):
            gurvits_step(state)


class TestSerialization:
    @pytest.mark.parametrize(
        "make",
        [
            lambda: (gen_rayleigh(6, 8, seed=20), {"n": 8}),
            lambda: (gen_spd_set(3, 4, 100.0, seed=21), {"cond": 100.0}),
            lambda: (gen_scaling(2, 5, seed=22), {}),
        ],
    )
    def test_round_trip(self, make):
        prob, extra = make()
        doc = instance_to_dict(prob, seed=20, **extra)
        assert set(doc) == {"kind", "d", "n", "m", "cond", "seed", "matrices"}
        clone = instance_from_dict(json.loads(json.dumps(doc)))
        if hasattr(prob, "a"):
            assert np.array_equal(clone.a, prob.a)
        elif hasattr(prob, "mats"):
            for m1, m2 in zip(clone.mats, prob.mats):
                assert np.array_equal(m1, m2)
        else:
            for m1, m2 in zip(clone.ops, prob.ops):
                assert np.array_equal(m1, m2)
