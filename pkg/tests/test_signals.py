"""Tests for the parameterized input-signal families."""

import numpy as np
import pytest

from spacefill.errors import HorizonError
from spacefill.signals import (
    FreeFormSignal,
    MultisineSignal,
    PiecewiseConstantSignal,
    project_theta,
    schroeder_multisine,
    signal_to_csv,
)


def jacobian_by_fd(sig, k, h=1e-7):
    theta = sig.theta
    jac = np.zeros((sig.n_inputs, theta.size))
    for i in range(theta.size):
        step = max(h, h * abs(theta[i]))
        plus = sig.with_theta(theta + step * np.eye(theta.size)[i])
        minus = sig.with_theta(theta - step * np.eye(theta.size)[i])
        jac[:, i] = (plus.evaluate(k) - minus.evaluate(k)) / (2.0 * step)
    return jac


class TestFreeForm:
    def test_one_based_sample_lookup(self):
        sig = FreeFormSignal(np.array([0.3, -1.2]))
        assert sig.evaluate(1) == pytest.approx(0.3)
        assert sig.evaluate(2) == pytest.approx(-1.2)

    def test_jacobian_selects_matching_parameter(self):
        sig = FreeFormSignal(np.zeros(5))
        np.testing.assert_array_equal(sig.theta_jacobian(3), [[0.0, 0.0, 1.0, 0.0, 0.0]])

    def test_time_zero_is_outside_the_family(self):
        # u(0) is the experiment's fixed initial input, never theta-driven
        sig = FreeFormSignal(np.zeros(4))
        with pytest.raises(HorizonError):
            sig.evaluate(0)
        with pytest.raises(HorizonError):
            sig.evaluate(5)

    def test_non_integer_time_rejected(self):
        sig = FreeFormSignal(np.zeros(4))
        with pytest.raises(HorizonError):
            sig.evaluate(1.5)

    def test_horizon_values_stack_theta(self):
        theta = np.array([1.0, -2.0, 3.0])
        sig = FreeFormSignal(theta)
        np.testing.assert_array_equal(sig.horizon_values(), theta.reshape(-1, 1))

    def test_bounds_projection_clips(self):
        sig = FreeFormSignal(np.array([5.0, -5.0, 0.5]), bounds=(-1.0, 1.0))
        projected = project_theta(sig)
        np.testing.assert_array_equal(projected.theta, [1.0, -1.0, 0.5])

    def test_projection_idempotent(self):
        rng = np.random.default_rng(31)
        sig = FreeFormSignal(rng.normal(size=6) * 3, bounds=(-1.0, 2.0))
        once = sig.project_theta_vector(sig.theta)
        twice = sig.project_theta_vector(once)
        np.testing.assert_array_equal(once, twice)

    def test_sampling_respects_bounds(self):
        rng = np.random.default_rng(32)
        sig = FreeFormSignal(np.zeros(50), bounds=(-0.5, 0.5))
        theta = sig.sample_initial_theta(rng)
        assert np.all(theta >= -0.5) and np.all(theta <= 0.5)


class TestMultisine:
    def test_single_bin_peak_value(self):
        # A sin(2 pi * 1 * (1/4) * k + pi/2) at k=0 equals A
        sig = MultisineSignal([1], base_freq=1.0, sample_freq=4.0, horizon=8,
                              theta=np.array([2.0, np.pi / 2.0]))
        assert sig.evaluate(0) == pytest.approx(2.0, rel=1e-14)

    def test_jacobian_at_time_zero_zero_phase(self):
        sig = MultisineSignal([1], base_freq=1.0, sample_freq=4.0, horizon=8,
                              theta=np.array([3.0, 0.0]))
        np.testing.assert_allclose(sig.theta_jacobian(0), [[0.0, 3.0]], atol=1e-15)

    def test_periodicity(self):
        # f0 = fs / N makes the signal N-periodic
        n = 16
        rng = np.random.default_rng(33)
        theta = np.concatenate([rng.uniform(0.5, 2.0, 3), rng.uniform(0.0, 2 * np.pi, 3)])
        sig = MultisineSignal([1, 2, 5], base_freq=1.0 / n, sample_freq=1.0,
                              horizon=2 * n, theta=theta)
        for k in range(n):
            assert sig.evaluate(k) == pytest.approx(sig.evaluate(k + n), abs=1e-12)

    def test_horizon_values_match_pointwise(self):
        rng = np.random.default_rng(34)
        theta = np.concatenate([rng.uniform(0.5, 2.0, 4), rng.uniform(0.0, 2 * np.pi, 4)])
        sig = MultisineSignal([1, 3, 4, 7], base_freq=0.01, sample_freq=1.0,
                              horizon=20, theta=theta)
        stacked = sig.horizon_values()
        for k in range(1, 21):
            assert stacked[k - 1, 0] == pytest.approx(sig.evaluate(k)[0], abs=1e-14)

    def test_shared_amplitude_projection_averages(self):
        sig = MultisineSignal([1, 2], base_freq=0.1, sample_freq=1.0, horizon=10,
                              theta=np.array([140.0, 160.0, 0.0, 0.0]),
                              shared_amplitude=True)
        projected = sig.project_theta_vector(sig.theta)
        np.testing.assert_allclose(projected[:2], [150.0, 150.0])

    def test_amplitude_bound_clips(self):
        sig = MultisineSignal([1], base_freq=0.1, sample_freq=1.0, horizon=10,
                              theta=np.array([250.0, 0.3]),
                              amplitude_bounds=(0.0, 200.0))
        projected = sig.project_theta_vector(sig.theta)
        np.testing.assert_allclose(projected, [200.0, 0.3])

    def test_sampling_draws_phases_keeps_amplitude(self):
        rng = np.random.default_rng(35)
        sig = MultisineSignal([1, 2, 3], base_freq=0.1, sample_freq=1.0, horizon=10,
                              init_amplitude=100.0, amplitude_bounds=(0.0, 200.0))
        theta = sig.sample_initial_theta(rng)
        np.testing.assert_array_equal(theta[:3], [100.0, 100.0, 100.0])
        assert np.all(theta[3:] >= 0.0) and np.all(theta[3:] < 2 * np.pi)

    def test_rejects_bad_bins(self):
        with pytest.raises(ValueError):
            MultisineSignal([2, 1], base_freq=0.1, sample_freq=1.0, horizon=4)
        with pytest.raises(ValueError):
            MultisineSignal([0], base_freq=0.1, sample_freq=1.0, horizon=4)


class TestPiecewiseConstant:
    def test_levels_on_windows_zero_outside(self):
        sig = PiecewiseConstantSignal([2, 5, 9], levels=[1.5, -2.0], horizon=12)
        values = [sig.evaluate(k)[0] for k in range(0, 13)]
        assert values[0] == 0.0 and values[1] == 0.0
        assert values[2] == 1.5 and values[4] == 1.5
        assert values[5] == -2.0 and values[8] == -2.0
        assert values[9] == 0.0 and values[12] == 0.0

    def test_theta_layout_and_length(self):
        sig = PiecewiseConstantSignal([0, 3, 7], levels=[1.0, 2.0])
        # levels block then switching instants: 2 * n_levels + 1 entries
        assert sig.n_theta == 5
        np.testing.assert_array_equal(sig.theta, [1.0, 2.0, 0.0, 3.0, 7.0])

    def test_switch_times_have_degenerate_bounds(self):
        sig = PiecewiseConstantSignal([0, 3, 7], levels=[1.0, 2.0])
        np.testing.assert_array_equal(sig.lower_bounds[2:], [0.0, 3.0, 7.0])
        np.testing.assert_array_equal(sig.upper_bounds[2:], [0.0, 3.0, 7.0])

    def test_jacobian_zero_for_switch_columns(self):
        sig = PiecewiseConstantSignal([0, 3, 7], levels=[1.0, 2.0])
        for k in range(0, 8):
            jac = sig.theta_jacobian(k)
            np.testing.assert_array_equal(jac[0, 2:], np.zeros(3))

    def test_projection_restores_switch_times(self):
        sig = PiecewiseConstantSignal([0, 3, 7], levels=[1.0, 2.0],
                                      amplitude_bounds=(-1.0, 1.0))
        moved = np.array([5.0, -3.0, 1.0, 2.0, 9.0])
        projected = sig.project_theta_vector(moved)
        np.testing.assert_array_equal(projected, [1.0, -1.0, 0.0, 3.0, 7.0])

    def test_default_horizon_is_last_switch(self):
        sig = PiecewiseConstantSignal([0, 4, 10], levels=[1.0, 2.0])
        assert sig.horizon == 10


class TestJacobianConsistency:
    def test_all_families_match_finite_differences(self):
        rng = np.random.default_rng(36)
        signals = [
            FreeFormSignal(rng.normal(size=6)),
            MultisineSignal(
                [1, 2, 4], base_freq=0.05, sample_freq=1.0, horizon=12,
                theta=np.concatenate([rng.uniform(0.5, 2.0, 3),
                                      rng.uniform(0.0, 2 * np.pi, 3)]),
            ),
            PiecewiseConstantSignal([0, 4, 9], levels=rng.normal(size=2), horizon=10),
        ]
        for sig in signals:
            for k in range(sig.min_time, sig.horizon + 1):
                analytic = sig.theta_jacobian(k)
                numeric = jacobian_by_fd(sig, k)
                assert np.abs(analytic - numeric).max() < 1e-6, (sig.family, k)

    def test_horizon_jacobians_match_pointwise(self):
        rng = np.random.default_rng(37)
        sig = MultisineSignal(
            [1, 3], base_freq=0.05, sample_freq=1.0, horizon=9,
            theta=np.concatenate([rng.uniform(0.5, 2.0, 2), rng.uniform(0.0, 2 * np.pi, 2)]),
        )
        stacked = sig.horizon_jacobians()
        for k in range(1, 10):
            np.testing.assert_allclose(stacked[k - 1], sig.theta_jacobian(k), atol=1e-15)


class TestSchroederMultisine:
    def test_single_bin_phase_zero(self):
        sig = schroeder_multisine(1, amplitude=1.0)
        np.testing.assert_array_equal(sig.phases, [0.0])

    def test_three_bin_phases(self):
        sig = schroeder_multisine(3, amplitude=1.0)
        np.testing.assert_allclose(sig.phases, [0.0, 0.0, -2.0 * np.pi / 3.0], atol=1e-15)

    def test_shared_amplitude_spectrum(self):
        sig = schroeder_multisine(5, amplitude=100.0)
        np.testing.assert_array_equal(sig.amplitudes, np.full(5, 100.0))
        assert sig.shared_amplitude

    def test_excited_bins_default_to_low_harmonics(self):
        sig = schroeder_multisine(4, amplitude=1.0)
        np.testing.assert_array_equal(sig.bins, [1, 2, 3, 4])

    def test_custom_bins_and_rates(self):
        sig = schroeder_multisine(
            3, amplitude=2.0, excited_bins=[11, 12, 13],
            base_freq=100.0 / 1024.0, sample_freq=100.0, horizon=1024,
        )
        assert sig.horizon == 1024
        np.testing.assert_array_equal(sig.bins, [11, 12, 13])

    def test_deterministic(self):
        a = schroeder_multisine(4, amplitude=3.0)
        b = schroeder_multisine(4, amplitude=3.0)
        np.testing.assert_array_equal(a.theta, b.theta)


class TestSignalCsv:
    def test_rows_cover_valid_times(self, tmp_path):
        sig = FreeFormSignal(np.array([1.0, 2.0, 3.0]))
        path = tmp_path / "signal.csv"
        signal_to_csv(sig, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0].startswith("k,")
        assert len(lines) == 4  # header + k = 1..3
