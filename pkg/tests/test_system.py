import numpy as np
import pytest

from maxent_steer import (
    BadWindow,
    DimensionMismatch,
    LinearSystemModel,
    SingularA,
    controllability_gramian,
    reachability_gramian,
    transition,
    validate_assumptions,
)

from conftest import (
    DEMO_A,
    DEMO_B,
    DEMO_SIGMA0,
    DEMO_SIGMA_T,
    random_ltv_system,
)


class TestModel:
    def test_broadcast_time_invariant(self):
        sys = LinearSystemModel(DEMO_A, DEMO_B, 50)
        assert sys.horizon == 50 and sys.n == 2 and sys.m == 1
        assert np.array_equal(sys.a(13), DEMO_A)

    def test_explicit_stacks(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((4, 3, 3))
        b = rng.standard_normal((4, 3, 2))
        sys = LinearSystemModel(a, b)
        assert sys.horizon == 4 and sys.n == 3 and sys.m == 2

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            LinearSystemModel(np.eye(2), np.zeros((3, 1)), 5)

    def test_horizon_required_for_single_matrices(self):
        with pytest.raises(DimensionMismatch):
            LinearSystemModel(np.eye(2), np.zeros((2, 1)))

    def test_input_scaling(self):
        sys = LinearSystemModel(DEMO_A, DEMO_B, 3)
        scaled = sys.with_input_scaled(2.0)
        assert np.allclose(scaled.B, 2.0 * sys.B)
        assert np.array_equal(scaled.A, sys.A)


class TestTransition:
    def test_identity_at_equal_steps(self, demo_system):
        for k in (0, 17, 50):
            assert np.array_equal(transition(demo_system, k, k), np.eye(2))

    def test_forward_product(self, demo_system):
        expected = np.array([[0.815, 0.21], [0.105, 1.445]])
        assert np.allclose(transition(demo_system, 2, 0), expected, atol=1e-15)

    def test_inverse_product(self, demo_system):
        prod = transition(demo_system, 0, 2) @ transition(demo_system, 2, 0)
        assert np.linalg.norm(prod - np.eye(2)) <= 1e-12

    def test_semigroup_property(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            sys = random_ltv_system(rng)
            ks = rng.integers(0, sys.horizon + 1, size=3)
            k, l, j = int(ks[0]), int(ks[1]), int(ks[2])
            lhs = transition(sys, k, l) @ transition(sys, l, j)
            rhs = transition(sys, k, j)
            assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.linalg.norm(rhs)))

    def test_singular_a_reported_with_step(self):
        a = np.stack([np.eye(2), np.diag([1.0, 0.0]), np.eye(2)])
        sys = LinearSystemModel(a, np.ones((3, 2, 1)))
        with pytest.raises(SingularA) as info:
            transition(sys, 0, 3)
        assert info.value.step == 1

    def test_out_of_range(self, demo_system):
        with pytest.raises(DimensionMismatch):
            transition(demo_system, 0, 51)


class TestGramians:
    def test_scalar_integrator_counts_steps(self):
        sys = LinearSystemModel(np.eye(1), np.eye(1), 6)
        for k in range(1, 7):
            assert reachability_gramian(sys, k, 0).data[0, 0] == pytest.approx(k)
            assert controllability_gramian(sys, k, 0).data[0, 0] == pytest.approx(k)

    def test_scalar_expanding_map(self):
        sys = LinearSystemModel(2.0 * np.eye(1), np.eye(1), 2)
        # direct sum of squared pullbacks: (1/2)^2 + (1/4)^2
        assert controllability_gramian(sys, 2, 0).data[0, 0] == pytest.approx(0.3125)

    def test_bad_window(self, demo_system):
        with pytest.raises(BadWindow):
            reachability_gramian(demo_system, 3, 3)

    def test_demo_full_horizon_positive_definite(self, demo_system):
        g = reachability_gramian(demo_system, 50, 0)
        assert np.linalg.eigvalsh(g.data)[0] > 0

    def test_recursion_matches_literal_sum(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            sys = random_ltv_system(rng)
            horizon = sys.horizon
            literal = np.zeros((sys.n, sys.n))
            for k in range(horizon):
                w = transition(sys, horizon, k + 1) @ sys.b(k)
                literal += w @ w.T
            got = reachability_gramian(sys, horizon, 0).data
            assert np.linalg.norm(got - literal) <= 1e-10 * (1 + np.linalg.norm(literal))

    def test_gramian_forward_recursion_identity(self):
        rng = np.random.default_rng(37)
        sys = random_ltv_system(rng)
        for k in range(1, sys.horizon):
            lhs = reachability_gramian(sys, k + 1, 0).data
            g = reachability_gramian(sys, k, 0).data
            rhs = sys.a(k) @ g @ sys.a(k).T + sys.b(k) @ sys.b(k).T
            assert np.linalg.norm(lhs - rhs) <= 1e-10 * (1 + np.linalg.norm(rhs))

    def test_pullback_identity(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            sys = random_ltv_system(rng)
            horizon = sys.horizon
            gr = reachability_gramian(sys, horizon, 0).data
            gc = controllability_gramian(sys, horizon, 0).data
            phi = transition(sys, 0, horizon)
            assert np.linalg.norm(gc - phi @ gr @ phi.T) <= 1e-10 * (1 + np.linalg.norm(gc))


class TestValidateAssumptions:
    def test_demo_instance_feasible(self, demo_system):
        report = validate_assumptions(demo_system, DEMO_SIGMA0, DEMO_SIGMA_T, 1.0)
        assert report.feasible
        assert report.all_a_invertible
        assert report.gramian_window is not None
        assert report.f_matrix_min_singular > 1e-6
        assert report.b_matrix_min_singular > 1e-6

    def test_forward_exceptional_boundary_detected(self, demo_system):
        phi = transition(demo_system, 50, 0)
        gr = reachability_gramian(demo_system, 50, 0).data
        sigma_t = phi @ DEMO_SIGMA0 @ phi.T + 1.0 * gr  # open-loop forecast
        report = validate_assumptions(demo_system, DEMO_SIGMA0, sigma_t, 1.0)
        assert not report.feasible
        assert report.f_matrix_min_singular <= 1e-8  # zero up to assembly round-off
        assert any("forward" in d for d in report.diagnostics)

    def test_no_gramian_window_without_input(self):
        sys = LinearSystemModel(np.eye(1), np.zeros((1, 1)), 2)
        report = validate_assumptions(sys)
        assert report.gramian_window is None
        assert not report.feasible

    def test_singular_dynamics_reported_per_step(self):
        a = np.stack([np.eye(2), np.diag([1.0, 0.0])])
        sys = LinearSystemModel(a, np.ones((2, 2, 1)))
        report = validate_assumptions(sys)
        assert report.a_step_invertible == (True, False)
        assert not report.feasible

    def test_point_mode_checks_without_boundary(self, demo_system):
        report = validate_assumptions(demo_system)
        assert report.feasible
        assert np.isnan(report.f_matrix_min_singular)
