"""Parameterized input-signal families.

Each family is a map from a parameter vector theta to a discrete-time input
sequence u(k, theta), together with the Jacobian d u(k) / d theta that the
analytic design gradient needs.  Three families are provided: free-form
(one parameter per sample), multisine (amplitudes and phases on a fixed
frequency grid), and piecewise-constant (amplitude levels on fixed switching
windows).  All families produce scalar inputs.

Time indexing is one-based for the free-form family (theta_k is the input at
sample k, k = 1..N); the closed-form families are also defined at k = 0.
The rollout never asks a family for u(0): the input applied on the first
propagation step is the separately supplied initial input.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import HorizonError

__all__ = [
    "InputSignal",
    "FreeFormSignal",
    "MultisineSignal",
    "PiecewiseConstantSignal",
    "schroeder_multisine",
    "project_theta",
    "signal_to_csv",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


def _broadcast_bounds(bounds, n_theta: int) -> tuple[np.ndarray, np.ndarray]:
    if bounds is None:
        lo = np.full(n_theta, -np.inf)
        hi = np.full(n_theta, np.inf)
    else:
        lo = np.broadcast_to(np.asarray(bounds[0], dtype=float), (n_theta,)).copy()
        hi = np.broadcast_to(np.asarray(bounds[1], dtype=float), (n_theta,)).copy()
    if np.any(lo > hi):
        raise ValueError("lower bounds must not exceed upper bounds")
    return lo, hi


class InputSignal:
    """Base class for parameter-to-signal maps.

    Subclasses fix ``family``, the earliest valid time index ``min_time``,
    and implement ``_value``/``_jacobian`` plus reconstruction via
    ``with_theta``.  Instances are immutable; all mutation-style operations
    return new objects.
    """

    family = "abstract"
    n_inputs = 1
    min_time = 0

    def __init__(self, theta, horizon: int, bounds=None, tied_groups=()):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.ndim != 1:
            raise ValueError(f"theta must be a vector, got shape {theta.shape}")
        if not int(horizon) >= 1:
            raise ValueError(f"horizon must be at least 1, got {horizon}")
        self.theta = _readonly(theta)
        self.horizon = int(horizon)
        lo, hi = _broadcast_bounds(bounds, theta.shape[0])
        self.lower_bounds = _readonly(lo)
        self.upper_bounds = _readonly(hi)
        self.tied_groups = tuple(np.asarray(g, dtype=int) for g in tied_groups)

    @property
    def n_theta(self) -> int:
        return self.theta.shape[0]

    def _check_time(self, k) -> int:
        if not isinstance(k, (int, np.integer)):
            raise HorizonError(f"time index must be an integer, got {k!r}")
        k = int(k)
        if not (self.min_time <= k <= self.horizon):
            raise HorizonError(
                f"time index {k} outside the horizon [{self.min_time}, {self.horizon}]"
            )
        return k

    def evaluate(self, k) -> np.ndarray:
        """Input value u(k, theta) as a length-1 vector."""
        return self._value(self._check_time(k))

    def theta_jacobian(self, k) -> np.ndarray:
        """Jacobian d u(k) / d theta, shape (n_inputs, n_theta)."""
        return self._jacobian(self._check_time(k))

    def horizon_values(self) -> np.ndarray:
        """Inputs at k = 1..horizon, shape (horizon, n_inputs)."""
        return np.stack([self._value(k) for k in range(1, self.horizon + 1)])

    def horizon_jacobians(self) -> np.ndarray:
        """Jacobians at k = 1..horizon, shape (horizon, n_inputs, n_theta)."""
        return np.stack([self._jacobian(k) for k in range(1, self.horizon + 1)])

    def project_theta_vector(self, theta) -> np.ndarray:
        """Parameters mapped into the feasible set.

        Tied groups are first replaced by their common mean, then every
        coordinate is clipped to its bounds.  Idempotent.
        """
        theta = np.array(theta, dtype=float, copy=True)
        if theta.shape != (self.n_theta,):
            raise ValueError(f"theta must have shape ({self.n_theta},), got {theta.shape}")
        for group in self.tied_groups:
            theta[group] = theta[group].mean()
        return np.clip(theta, self.lower_bounds, self.upper_bounds)

    def with_theta(self, theta) -> "InputSignal":
        raise NotImplementedError

    def sample_initial_theta(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def _value(self, k: int) -> np.ndarray:
        raise NotImplementedError

    def _jacobian(self, k: int) -> np.ndarray:
        raise NotImplementedError


def project_theta(sig: InputSignal) -> InputSignal:
    """Signal with its parameters projected into the feasible set."""
    return sig.with_theta(sig.project_theta_vector(sig.theta))


class FreeFormSignal(InputSignal):
    """One free parameter per sample: u(k, theta) = theta_k for k = 1..N.

    The most expressive family: any target sequence on the horizon is
    realized exactly by setting theta to it.
    """

    family = "free_form"
    min_time = 1

    def __init__(self, theta, bounds=None):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        super().__init__(theta, horizon=theta.shape[0], bounds=bounds)

    def _value(self, k: int) -> np.ndarray:
        return self.theta[k - 1 : k]

    def _jacobian(self, k: int) -> np.ndarray:
        row = np.zeros((1, self.n_theta))
        row[0, k - 1] = 1.0
        return row

    def horizon_values(self) -> np.ndarray:
        return self.theta.reshape(-1, 1)

    def horizon_jacobians(self) -> np.ndarray:
        return np.eye(self.n_theta).reshape(self.n_theta, 1, self.n_theta)

    def with_theta(self, theta) -> "FreeFormSignal":
        return FreeFormSignal(theta, bounds=(self.lower_bounds, self.upper_bounds))

    def sample_initial_theta(self, rng: np.random.Generator) -> np.ndarray:
        # standard normal per sample, clipped into any declared bounds
        return self.project_theta_vector(rng.standard_normal(self.n_theta))


class MultisineSignal(InputSignal):
    """Sum of sinusoids on an integer frequency grid.

    ``u(k, theta) = sum_l A_l sin(2 pi l (f0 / fs) k + phi_l)`` over the
    excited bins ``l``; theta stacks the amplitudes then the phases, so
    n_theta = 2 * n_bins.  When every excited frequency ``l * f0`` divides
    the sampling grid evenly (f0 = fs / N), the signal is N-periodic.

    Parameters
    ----------
    bins : array_like of int
        Excited harmonic indices (multiples of the base frequency).
    base_freq, sample_freq : float
        Base frequency f0 and sampling frequency fs in consistent units.
    horizon : int
        Last valid time index N.
    theta : array_like, optional
        Initial parameters; defaults to ``init_amplitude`` for every
        amplitude and zero phases.
    amplitude_bounds : pair, optional
        Bounds applied to the amplitude block; phases are unbounded.
    shared_amplitude : bool, optional
        Tie all amplitudes to a single optimization variable.
    init_amplitude : float, optional
        Amplitude used by default theta and by initial-parameter sampling.
    """

    family = "multisine"
    min_time = 0

    def __init__(
        self,
        bins,
        base_freq: float,
        sample_freq: float,
        horizon: int,
        theta=None,
        amplitude_bounds=(0.0, np.inf),
        shared_amplitude: bool = False,
        init_amplitude: float = 1.0,
    ):
        bins = np.atleast_1d(np.asarray(bins, dtype=int))
        if bins.ndim != 1 or bins.size < 1 or np.any(bins < 1) or np.any(np.diff(bins) <= 0):
            raise ValueError("bins must be a strictly increasing vector of positive integers")
        if not (base_freq > 0 and sample_freq > 0):
            raise ValueError("base_freq and sample_freq must be positive")
        n_f = bins.shape[0]
        if theta is None:
            theta = np.concatenate([np.full(n_f, float(init_amplitude)), np.zeros(n_f)])
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (2 * n_f,):
            raise ValueError(f"theta must have shape ({2 * n_f},), got {theta.shape}")
        amp_lo, amp_hi = _broadcast_bounds(amplitude_bounds, n_f)
        lower = np.concatenate([amp_lo, np.full(n_f, -np.inf)])
        upper = np.concatenate([amp_hi, np.full(n_f, np.inf)])
        tied = (np.arange(n_f),) if shared_amplitude else ()
        super().__init__(theta, horizon=horizon, bounds=(lower, upper), tied_groups=tied)
        self.bins = bins
        self.bins.flags.writeable = False
        self.base_freq = float(base_freq)
        self.sample_freq = float(sample_freq)
        self.shared_amplitude = bool(shared_amplitude)
        self.init_amplitude = float(init_amplitude)
        # per-sample angular increment of each excited bin
        self._omega = 2.0 * np.pi * self.bins * (self.base_freq / self.sample_freq)

    @property
    def n_bins(self) -> int:
        return self.bins.shape[0]

    @property
    def amplitudes(self) -> np.ndarray:
        return self.theta[: self.n_bins]

    @property
    def phases(self) -> np.ndarray:
        return self.theta[self.n_bins :]

    def _value(self, k: int) -> np.ndarray:
        u = np.dot(self.amplitudes, np.sin(self._omega * k + self.phases))
        return np.array([u])

    def _jacobian(self, k: int) -> np.ndarray:
        angle = self._omega * k + self.phases
        return np.concatenate([np.sin(angle), self.amplitudes * np.cos(angle)]).reshape(1, -1)

    def horizon_values(self) -> np.ndarray:
        k = np.arange(1, self.horizon + 1)
        angles = np.outer(k, self._omega) + self.phases
        return (np.sin(angles) @ self.amplitudes).reshape(-1, 1)

    def horizon_jacobians(self) -> np.ndarray:
        k = np.arange(1, self.horizon + 1)
        angles = np.outer(k, self._omega) + self.phases
        jac = np.concatenate([np.sin(angles), np.cos(angles) * self.amplitudes], axis=1)
        return jac.reshape(self.horizon, 1, self.n_theta)

    def with_theta(self, theta) -> "MultisineSignal":
        return MultisineSignal(
            self.bins,
            self.base_freq,
            self.sample_freq,
            self.horizon,
            theta=theta,
            amplitude_bounds=(self.lower_bounds[: self.n_bins], self.upper_bounds[: self.n_bins]),
            shared_amplitude=self.shared_amplitude,
            init_amplitude=self.init_amplitude,
        )

    def sample_initial_theta(self, rng: np.random.Generator) -> np.ndarray:
        """Fixed initial amplitude, phases drawn uniformly from [0, 2 pi)."""
        theta = np.concatenate(
            [
                np.full(self.n_bins, self.init_amplitude),
                rng.uniform(0.0, 2.0 * np.pi, self.n_bins),
            ]
        )
        return self.project_theta_vector(theta)


class PiecewiseConstantSignal(InputSignal):
    """Constant amplitude levels on fixed switching windows.

    ``u(k) = A_l`` for ``p_l <= k < p_{l+1}`` and 0 outside every window.
    theta stacks the amplitude levels then the switching instants, so
    n_theta = 2 * n_levels + 1.  The switching instants are integers held
    fixed at construction: moving them changes the signal discontinuously,
    which would break the bounded-derivative requirement the design gradient
    relies on.  Their theta coordinates carry degenerate bounds [p, p] and
    zero Jacobian columns, so optimization leaves them untouched.
    """

    family = "piecewise_constant"
    min_time = 0

    def __init__(self, switch_times, levels=None, amplitude_bounds=None, horizon=None):
        p = np.atleast_1d(np.asarray(switch_times, dtype=int))
        if p.ndim != 1 or p.size < 2 or np.any(np.diff(p) <= 0):
            raise ValueError("switch_times must be a strictly increasing vector of length >= 2")
        n_levels = p.shape[0] - 1
        if levels is None:
            levels = np.zeros(n_levels)
        levels = np.atleast_1d(np.asarray(levels, dtype=float))
        if levels.shape != (n_levels,):
            raise ValueError(f"levels must have shape ({n_levels},), got {levels.shape}")
        theta = np.concatenate([levels, p.astype(float)])
        amp_lo, amp_hi = _broadcast_bounds(amplitude_bounds, n_levels)
        lower = np.concatenate([amp_lo, p.astype(float)])
        upper = np.concatenate([amp_hi, p.astype(float)])
        if horizon is None:
            horizon = int(p[-1])
        super().__init__(theta, horizon=horizon, bounds=(lower, upper))
        self.switch_times = p
        self.switch_times.flags.writeable = False

    @property
    def n_levels(self) -> int:
        return self.switch_times.shape[0] - 1

    @property
    def levels(self) -> np.ndarray:
        return self.theta[: self.n_levels]

    def _window(self, k: int) -> int:
        """Active window index for time k, or -1 when outside all windows."""
        idx = int(np.searchsorted(self.switch_times, k, side="right")) - 1
        if 0 <= idx < self.n_levels:
            return idx
        return -1

    def _value(self, k: int) -> np.ndarray:
        idx = self._window(k)
        return np.array([self.levels[idx] if idx >= 0 else 0.0])

    def _jacobian(self, k: int) -> np.ndarray:
        row = np.zeros((1, self.n_theta))
        idx = self._window(k)
        if idx >= 0:
            row[0, idx] = 1.0
        return row

    def with_theta(self, theta) -> "PiecewiseConstantSignal":
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.n_theta,):
            raise ValueError(f"theta must have shape ({self.n_theta},), got {theta.shape}")
        sig = PiecewiseConstantSignal(
            self.switch_times,
            levels=theta[: self.n_levels],
            amplitude_bounds=(self.lower_bounds[: self.n_levels], self.upper_bounds[: self.n_levels]),
            horizon=self.horizon,
        )
        return sig

    def sample_initial_theta(self, rng: np.random.Generator) -> np.ndarray:
        lo = self.lower_bounds[: self.n_levels]
        hi = self.upper_bounds[: self.n_levels]
        levels = np.where(
            np.isfinite(lo) & np.isfinite(hi),
            rng.uniform(np.where(np.isfinite(lo), lo, -1.0), np.where(np.isfinite(hi), hi, 1.0)),
            rng.standard_normal(self.n_levels),
        )
        return self.project_theta_vector(
            np.concatenate([levels, self.switch_times.astype(float)])
        )


def schroeder_multisine(
    n_f: int,
    amplitude: float,
    excited_bins=None,
    base_freq: float = 1.0,
    sample_freq: float | None = None,
    horizon: int | None = None,
) -> MultisineSignal:
    """Multisine with the deterministic Schroeder phase schedule.

    Phases follow ``phi_j = -pi * j * (j - 1) / n_f`` with j the 0-based
    ordinal of each excited bin; all bins share the given amplitude.  This
    is the classical low-crest-factor reference signal used as an
    unoptimized baseline.
    """
    if n_f < 1:
        raise ValueError(f"n_f must be at least 1, got {n_f}")
    if excited_bins is None:
        excited_bins = np.arange(1, n_f + 1)
    excited_bins = np.atleast_1d(np.asarray(excited_bins, dtype=int))
    if excited_bins.shape[0] != n_f:
        raise ValueError(f"expected {n_f} excited bins, got {excited_bins.shape[0]}")
    if sample_freq is None:
        sample_freq = 1.0
    if horizon is None:
        horizon = max(1, int(round(sample_freq / base_freq)))
    j = np.arange(n_f, dtype=float)
    phases = -np.pi * j * (j - 1.0) / n_f
    theta = np.concatenate([np.full(n_f, float(amplitude)), phases])
    return MultisineSignal(
        excited_bins,
        base_freq,
        sample_freq,
        horizon,
        theta=theta,
        amplitude_bounds=(0.0, np.inf),
        shared_amplitude=True,
        init_amplitude=float(amplitude),
    )


def signal_to_csv(sig: InputSignal, path) -> None:
    """Write the signal as CSV rows (k, u1..u_{n_u}) over its valid times."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k"] + [f"u{i + 1}" for i in range(sig.n_inputs)])
        for k in range(sig.min_time, sig.horizon + 1):
            u = sig.evaluate(k)
            writer.writerow([k] + [format(v, ".17g") for v in u])
