"""Tests for discretization, integration, system models, and rollout."""

import numpy as np
import pytest
from scipy.linalg import expm

from spacefill.dynamics import (
    MsdParams,
    Trajectory,
    continuous_system,
    lti_from_continuous,
    lti_system,
    msd_field_jacobians,
    msd_system,
    msd_vector_field,
    reachability_advisory,
    rk4_step,
    rollout,
    trajectory_to_csv,
    zoh_discretize,
)
from spacefill.errors import HorizonError, TrajectoryDivergedError
from spacefill.signals import FreeFormSignal, MultisineSignal

LTI_A = np.array([[0.0, 1.0], [-0.3, -0.5]])
LTI_B = np.array([[0.0], [1.0]])


def zoh_series_oracle(a, b, sample_time, terms=50):
    """Taylor-series discretization, independent of the expm implementation."""
    n = a.shape[0]
    a_d = np.zeros_like(a)
    integral = np.zeros_like(a)
    power = np.eye(n)
    factorial = 1.0
    for k in range(terms):
        factorial = factorial * max(k, 1)
        a_d = a_d + power * sample_time**k / factorial
        integral = integral + power * sample_time ** (k + 1) / (factorial * (k + 1))
        power = power @ a
    return a_d, integral @ b


class TestZohDiscretize:
    def test_zero_dynamics_integrates_input_directly(self):
        a_d, b_d = zoh_discretize(np.zeros((2, 2)), np.eye(2), 1.0)
        np.testing.assert_allclose(a_d, np.eye(2), atol=1e-14)
        np.testing.assert_allclose(b_d, np.eye(2), atol=1e-14)

    def test_scalar_decay(self):
        a_d, b_d = zoh_discretize(np.array([[-1.0]]), np.array([[1.0]]), 1.0)
        assert a_d[0, 0] == pytest.approx(np.exp(-1.0), rel=1e-12)
        assert b_d[0, 0] == pytest.approx(1.0 - np.exp(-1.0), rel=1e-12)

    def test_matches_series_oracle_on_benchmark_matrices(self):
        a_d, b_d = zoh_discretize(LTI_A, LTI_B, 1.0)
        a_ref, b_ref = zoh_series_oracle(LTI_A, LTI_B, 1.0)
        np.testing.assert_allclose(a_d, a_ref, atol=1e-10)
        np.testing.assert_allclose(b_d, b_ref, atol=1e-10)

    def test_invertible_a_closed_form(self):
        rng = np.random.default_rng(41)
        a = rng.normal(size=(3, 3)) - 2.0 * np.eye(3)
        b = rng.normal(size=(3, 2))
        a_d, b_d = zoh_discretize(a, b, 0.7)
        closed = np.linalg.solve(a, (a_d - np.eye(3)) @ b)
        np.testing.assert_allclose(b_d, closed, atol=1e-10)

    def test_non_finite_entries_rejected(self):
        with pytest.raises(ValueError):
            zoh_discretize(np.array([[np.nan]]), np.array([[1.0]]), 1.0)


class TestRk4Step:
    def test_zero_field_is_identity(self):
        x = np.array([0.4, -0.7])
        out = rk4_step(lambda x, u: np.zeros(2), x, np.zeros(1), 0.1)
        np.testing.assert_array_equal(out, x)

    def test_scalar_exponential_accuracy(self):
        x = rk4_step(lambda x, u: -x, np.array([1.0]), np.zeros(1), 0.01)
        assert abs(x[0] - np.exp(-0.01)) < 1e-11

    def test_fourth_order_convergence(self):
        # halving the step should shrink the local error by roughly 2^4
        field = lambda x, u: np.array([x[1], -1.3 * x[0] - 0.2 * x[1] + u[0]])
        x0 = np.array([0.8, -0.4])
        u = np.array([0.3])
        exact = expm(np.array([[0.0, 1.0], [-1.3, -0.2]]) * 0.2) @ x0
        forced = np.linalg.solve(
            np.array([[0.0, 1.0], [-1.3, -0.2]]),
            (expm(np.array([[0.0, 1.0], [-1.3, -0.2]]) * 0.2) - np.eye(2)) @ np.array([0.0, 0.3]),
        )
        exact = exact + forced

        def error(dt):
            steps = int(round(0.2 / dt))
            x = x0
            for _ in range(steps):
                x = rk4_step(field, x, u, dt)
            return np.linalg.norm(x - exact)

        ratio = error(0.05) / error(0.025)
        assert 12.0 <= ratio <= 20.0


class TestMsdSystem:
    def test_vector_field_hand_value(self):
        deriv = msd_vector_field(np.array([0.0, 1.0]), np.array([0.0]))
        np.testing.assert_allclose(deriv, [1.0, -2.0], rtol=1e-14)

    def test_origin_is_unforced_fixed_point(self):
        system = msd_system()
        out = system.step(np.zeros(2), np.zeros(1))
        np.testing.assert_allclose(out, np.zeros(2), atol=1e-15)

    def test_field_jacobians_match_finite_differences(self):
        rng = np.random.default_rng(42)
        params = MsdParams()
        for _ in range(20):
            x = rng.uniform(-2.0, 2.0, size=2)
            u = rng.uniform(-400.0, 400.0, size=1)
            jx, ju = msd_field_jacobians(x, u, params)
            h = 1e-6
            for i in range(2):
                dx = np.zeros(2)
                dx[i] = h
                fd = (msd_vector_field(x + dx, u, params) - msd_vector_field(x - dx, u, params)) / (2 * h)
                np.testing.assert_allclose(jx[:, i], fd, rtol=1e-5, atol=1e-7)
            fd = (msd_vector_field(x, u + h, params) - msd_vector_field(x, u - h, params)) / (2 * h)
            np.testing.assert_allclose(ju[:, 0], fd, rtol=1e-5, atol=1e-7)

    def test_step_jacobians_match_finite_differences(self):
        rng = np.random.default_rng(43)
        system = msd_system()
        for _ in range(10):
            x = rng.uniform(-1.0, 1.0, size=2)
            u = rng.uniform(-100.0, 100.0, size=1)
            fx, fu = system.jacobians(x, u)
            h = 1e-6
            for i in range(2):
                dx = np.zeros(2)
                dx[i] = h
                fd = (system.step(x + dx, u) - system.step(x - dx, u)) / (2 * h)
                np.testing.assert_allclose(fx[:, i], fd, rtol=1e-5, atol=1e-8)
            fd = (system.step(x, u + h) - system.step(x, u - h)) / (2 * h)
            np.testing.assert_allclose(fu[:, 0], fd, rtol=1e-5, atol=1e-8)

    def test_unforced_motion_decays(self):
        system = msd_system()
        x = np.array([1.0, 0.0])
        for _ in range(6000):  # 60 s at dt = 0.01
            x = system.step(x, np.zeros(1))
        assert np.linalg.norm(x) < 1e-3

    def test_rejects_non_positive_parameters(self):
        with pytest.raises(ValueError):
            MsdParams(mass=0.0)


class TestLtiSystem:
    def test_step_is_affine_map(self):
        system = lti_from_continuous(LTI_A, LTI_B, 1.0)
        a_d, b_d = zoh_discretize(LTI_A, LTI_B, 1.0)
        x = np.array([0.3, -0.8])
        u = np.array([0.5])
        np.testing.assert_allclose(system.step(x, u), a_d @ x + b_d @ u, atol=1e-14)

    def test_jacobians_are_the_system_matrices(self):
        a_d, b_d = zoh_discretize(LTI_A, LTI_B, 1.0)
        system = lti_system(a_d, b_d)
        fx, fu = system.jacobians(np.zeros(2), np.zeros(1))
        np.testing.assert_array_equal(fx, a_d)
        np.testing.assert_array_equal(fu, b_d)


class TestRollout:
    def make_lti(self):
        return lti_from_continuous(LTI_A, LTI_B, 1.0)

    def test_closed_form_states(self):
        system = self.make_lti()
        a_d, b_d = zoh_discretize(LTI_A, LTI_B, 1.0)
        rng = np.random.default_rng(44)
        theta = rng.standard_normal(8)
        sig = FreeFormSignal(theta)
        x0 = np.array([0.2, -0.1])
        u0 = np.array([0.7])
        trajectory, dataset = rollout(system, sig, x0, 8, u0=u0)
        x = x0
        applied = [u0] + [np.array([theta[k - 1]]) for k in range(1, 8)]
        for k in range(8):
            x = a_d @ x + b_d @ applied[k]
            np.testing.assert_allclose(trajectory.states[k + 1], x, atol=1e-9)

    def test_dataset_pairs_states_with_current_inputs(self):
        # z_j = (x(j), u(j)): the input column holds u(j), not u(j-1)
        system = self.make_lti()
        theta = np.array([1.0, 2.0, 3.0])
        trajectory, dataset = rollout(system, FreeFormSignal(theta), np.zeros(2), 3)
        assert dataset.points.shape == (3, 3)
        np.testing.assert_array_equal(dataset.points[:, 2], theta)
        np.testing.assert_allclose(dataset.points[:, :2], trajectory.states[1:], atol=0.0)

    def test_initial_input_applies_at_time_zero_only(self):
        system = self.make_lti()
        a_d, b_d = zoh_discretize(LTI_A, LTI_B, 1.0)
        sig = FreeFormSignal(np.zeros(2))
        trajectory, _ = rollout(system, sig, np.zeros(2), 2, u0=np.array([1.0]))
        np.testing.assert_allclose(trajectory.states[1], b_d @ [1.0], atol=1e-14)
        np.testing.assert_allclose(trajectory.states[2], a_d @ (b_d @ [1.0]), atol=1e-14)

    def test_final_input_enters_dataset_not_state_recursion(self):
        # the state recursion consumes u(0..N-1); u(N) appears only in z_N
        system = self.make_lti()
        a_d, b_d = zoh_discretize(LTI_A, LTI_B, 1.0)
        base = np.array([1.0, 2.0, 3.0])
        for last in (3.0, 99.0):
            theta = np.concatenate([base[:2], [last]])
            trajectory, dataset = rollout(system, FreeFormSignal(theta), np.zeros(2), 3)
            assert dataset.points[-1, 2] == last
            x = np.zeros(2)
            for u in (0.0, 1.0, 2.0):
                x = a_d @ x + b_d @ [u]
            np.testing.assert_allclose(trajectory.states[3], x, atol=1e-12)

    def test_sensitivities_match_finite_differences(self):
        rng = np.random.default_rng(45)
        system = msd_system()
        theta = np.concatenate([rng.uniform(50.0, 150.0, 2), rng.uniform(0.0, 2 * np.pi, 2)])
        sig = MultisineSignal([1, 3], base_freq=0.5, sample_freq=20.0, horizon=30, theta=theta)
        x0 = np.zeros(2)
        trajectory, _ = rollout(system, sig, x0, 30, with_sensitivities=True)
        h = 1e-5
        for i in range(theta.size):
            step = h * max(1.0, abs(theta[i]))
            plus, _ = rollout(system, sig.with_theta(theta + step * np.eye(4)[i]), x0, 30)
            minus, _ = rollout(system, sig.with_theta(theta - step * np.eye(4)[i]), x0, 30)
            fd = (plus.states - minus.states) / (2.0 * step)
            for k in range(31):
                np.testing.assert_allclose(
                    trajectory.sensitivities[k][:, i], fd[k], rtol=1e-4, atol=1e-5
                )

    def test_lti_sensitivities_exact(self):
        # for linear dynamics the sensitivity recursion is exact in theta
        system = self.make_lti()
        a_d, b_d = zoh_discretize(LTI_A, LTI_B, 1.0)
        n = 6
        sig = FreeFormSignal(np.zeros(n))
        trajectory, _ = rollout(system, sig, np.zeros(2), n, with_sensitivities=True)
        expected = np.zeros((2, n))
        np.testing.assert_array_equal(trajectory.sensitivities[0], expected)
        for k in range(1, n + 1):
            expected = a_d @ expected
            if k >= 2:
                expected[:, k - 2] += b_d[:, 0]
            np.testing.assert_allclose(trajectory.sensitivities[k], expected, atol=1e-10)

    def test_sensitivities_start_at_zero(self):
        system = self.make_lti()
        trajectory, _ = rollout(
            system, FreeFormSignal(np.ones(4)), np.zeros(2), 4, with_sensitivities=True
        )
        np.testing.assert_array_equal(trajectory.sensitivities[0], np.zeros((2, 4)))
        np.testing.assert_array_equal(trajectory.sensitivities[1], np.zeros((2, 4)))

    def test_divergence_carries_failing_step(self):
        unstable = lti_system(np.array([[4.0]]) * 1e2, np.array([[1.0]]))
        sig = FreeFormSignal(np.full(300, 1e300))
        with pytest.raises(TrajectoryDivergedError) as excinfo:
            rollout(unstable, sig, np.zeros(1), 300)
        assert excinfo.value.step >= 1

    def test_horizon_shorter_than_rollout_rejected(self):
        system = self.make_lti()
        with pytest.raises(ValueError):
            rollout(system, FreeFormSignal(np.zeros(3)), np.zeros(2), 5)


class TestTrajectoryType:
    def test_length_consistency_enforced(self):
        with pytest.raises(ValueError):
            Trajectory(states=np.zeros((5, 2)), inputs=np.zeros((5, 1)))

    def test_first_sensitivity_must_be_zero(self):
        sens = np.ones((3, 2, 4))
        with pytest.raises(ValueError):
            Trajectory(states=np.zeros((3, 2)), inputs=np.zeros((2, 1)), sensitivities=sens)


class TestReachabilityAdvisory:
    def test_sufficient_data_silent(self):
        assert reachability_advisory(40, 4, 2) is None
        assert reachability_advisory(1024, 512, 1) is None

    def test_short_horizon_warns(self):
        message = reachability_advisory(40, 16, 2)
        assert message is not None and "40" in message and "48" in message

    def test_invalid_coverage_horizon_rejected(self):
        with pytest.raises(ValueError):
            reachability_advisory(40, 4, 0)


class TestTrajectoryCsv:
    def test_columns_and_final_row(self, tmp_path):
        system = lti_from_continuous(LTI_A, LTI_B, 1.0)
        theta = np.array([1.0, 2.0, 3.0])
        trajectory, dataset = rollout(system, FreeFormSignal(theta), np.zeros(2), 3)
        path = tmp_path / "trajectory.csv"
        trajectory_to_csv(trajectory, path, final_input=dataset.points[-1, 2:])
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "k,x1,x2,u1"
        assert len(lines) == 5  # header + k = 0..3
        last = lines[-1].split(",")
        assert last[0] == "3"
        assert float(last[3]) == pytest.approx(3.0)
