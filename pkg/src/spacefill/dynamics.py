"""Discrete-time system models, simulation, and forward sensitivities.

A :class:`SystemModel` wraps a discrete step map ``x(k+1) = f(x(k), u(k))``
with optional Jacobians.  Linear models come from exact zero-order-hold
discretization; continuous nonlinear models are advanced with classical RK4
at a fixed step, with the input held constant over each step.  Rollout
simulates a parameterized input signal through a model, assembles the joint
input-state dataset the design cost consumes, and can propagate the
sensitivity of every state to the signal parameters, which is what makes the
analytic design gradient possible.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .errors import (
    HorizonError,
    IntegrationDivergedError,
    JacobiansUnavailableError,
    TrajectoryDivergedError,
)
from .gp import Dataset
from .signals import InputSignal

__all__ = [
    "SystemModel",
    "Trajectory",
    "zoh_discretize",
    "rk4_step",
    "continuous_system",
    "MsdParams",
    "msd_vector_field",
    "msd_field_jacobians",
    "msd_system",
    "lti_system",
    "lti_from_continuous",
    "rollout",
    "reachability_advisory",
    "trajectory_to_csv",
]


@dataclass(frozen=True)
class SystemModel:
    """Discrete-time state-space model.

    ``step(x, u) -> x_next`` implements the transition map.  ``jacobians``,
    when available, returns ``(d x_next / d x, d x_next / d u)`` at a point;
    ``step_and_jacobians`` fuses both so shared work (RK4 stages) is done
    once.  Models without Jacobians support simulation but not the analytic
    design gradient.
    """

    n_x: int
    n_u: int
    step: Callable[[np.ndarray, np.ndarray], np.ndarray]
    jacobians: Callable[[np.ndarray, np.ndarray], tuple] | None = None
    step_and_jacobians: Callable[[np.ndarray, np.ndarray], tuple] | None = None
    name: str = ""
    sample_time: float | None = None

    def __post_init__(self):
        if self.n_x < 1 or self.n_u < 1:
            raise ValueError(f"n_x and n_u must be positive, got {self.n_x}, {self.n_u}")

    @property
    def has_jacobians(self) -> bool:
        return self.jacobians is not None or self.step_and_jacobians is not None

    def _fused(self, x: np.ndarray, u: np.ndarray) -> tuple:
        if self.step_and_jacobians is not None:
            return self.step_and_jacobians(x, u)
        if self.jacobians is None:
            raise JacobiansUnavailableError(
                f"system {self.name or type(self).__name__!r} provides no Jacobians; "
                "analytic sensitivities are unavailable (use the finite-difference gradient)"
            )
        fx, fu = self.jacobians(x, u)
        return self.step(x, u), fx, fu


@dataclass(frozen=True)
class Trajectory:
    """Simulated trajectory.

    ``states`` holds x(0..N); ``inputs`` holds the inputs actually applied
    during propagation, u(0..N-1).  ``sensitivities``, when present, holds
    d x(k) / d theta for k = 0..N with the k = 0 entry identically zero
    because the initial state does not depend on the signal parameters.
    """

    states: np.ndarray
    inputs: np.ndarray
    sensitivities: np.ndarray | None = None

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        inputs = np.asarray(self.inputs, dtype=float)
        if states.ndim != 2 or inputs.ndim != 2:
            raise ValueError("states and inputs must be 2-d arrays")
        if inputs.shape[0] != states.shape[0] - 1:
            raise ValueError(
                f"expected {states.shape[0] - 1} input rows for {states.shape[0]} states, "
                f"got {inputs.shape[0]}"
            )
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "inputs", inputs)
        if self.sensitivities is not None:
            sens = np.asarray(self.sensitivities, dtype=float)
            if sens.shape[:2] != states.shape or np.any(sens[0] != 0.0):
                raise ValueError("sensitivities must have shape (N+1, n_x, n_theta) with a zero first entry")
            object.__setattr__(self, "sensitivities", sens)

    @property
    def n_steps(self) -> int:
        return self.states.shape[0] - 1


def zoh_discretize(a: np.ndarray, b: np.ndarray, sample_time: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold discretization of a continuous LTI model.

    Returns ``(A_d, B_d)`` with ``A_d = exp(A T)`` and
    ``B_d = int_0^T exp(A s) ds B``, computed jointly via the matrix
    exponential of the block matrix ``[[A, B], [0, 0]] * T``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"A must be square, got shape {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"B must have {a.shape[0]} rows, got shape {b.shape}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("A and B must be finite")
    if not sample_time > 0:
        raise ValueError(f"sample_time must be positive, got {sample_time}")
    n, m = a.shape[0], b.shape[1]
    block = np.zeros((n + m, n + m))
    block[:n, :n] = a
    block[:n, n:] = b
    phi = expm(block * float(sample_time))
    return phi[:n, :n], phi[:n, n:]


def rk4_step(field: Callable, x: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step with the input held constant.

    Raises :class:`IntegrationDivergedError` when any stage or the result is
    non-finite.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = field(x, u)
        k2 = field(x + 0.5 * dt * k1, u)
        k3 = field(x + 0.5 * dt * k2, u)
        k4 = field(x + dt * k3, u)
        x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(x_next).all():
        raise IntegrationDivergedError("non-finite state produced by an integration step")
    return x_next


def continuous_system(
    field: Callable,
    field_jacobians: Callable | None,
    n_x: int,
    n_u: int,
    dt: float,
    name: str = "",
) -> SystemModel:
    """Discrete model obtained by RK4 integration of a continuous field.

    ``field(x, u)`` returns the state derivative; ``field_jacobians(x, u)``,
    when given, returns the field's ``(d/dx, d/du)`` and is chained through
    the RK4 stages so the discrete-map Jacobians are exact derivatives of
    the implemented step, not approximations of the flow.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    dt = float(dt)
    eye = np.eye(n_x)

    def step(x, u):
        return rk4_step(field, x, u, dt)

    def step_and_jacobians(x, u):
        with np.errstate(over="ignore", invalid="ignore"):
            s1 = np.asarray(x, dtype=float)
            k1 = field(s1, u)
            s2 = s1 + 0.5 * dt * k1
            k2 = field(s2, u)
            s3 = s1 + 0.5 * dt * k2
            k3 = field(s3, u)
            s4 = s1 + dt * k3
            k4 = field(s4, u)
            x_next = s1 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

            jx1, ju1 = field_jacobians(s1, u)
            jx2, ju2 = field_jacobians(s2, u)
            jx3, ju3 = field_jacobians(s3, u)
            jx4, ju4 = field_jacobians(s4, u)
            # chain each stage derivative through the preceding stages
            d1x = jx1
            d2x = jx2 @ (eye + 0.5 * dt * d1x)
            d3x = jx3 @ (eye + 0.5 * dt * d2x)
            d4x = jx4 @ (eye + dt * d3x)
            fx = eye + (dt / 6.0) * (d1x + 2.0 * d2x + 2.0 * d3x + d4x)
            d1u = ju1
            d2u = ju2 + jx2 @ (0.5 * dt * d1u)
            d3u = ju3 + jx3 @ (0.5 * dt * d2u)
            d4u = ju4 + jx4 @ (dt * d3u)
            fu = (dt / 6.0) * (d1u + 2.0 * d2u + 2.0 * d3u + d4u)
        return x_next, fx, fu

    def jacobians(x, u):
        _, fx, fu = step_and_jacobians(x, u)
        return fx, fu

    has_jac = field_jacobians is not None
    return SystemModel(
        n_x=n_x,
        n_u=n_u,
        step=step,
        jacobians=jacobians if has_jac else None,
        step_and_jacobians=step_and_jacobians if has_jac else None,
        name=name,
        sample_time=dt,
    )


@dataclass(frozen=True)
class MsdParams:
    """Physical parameters of the nonlinear mass-spring-damper benchmark.

    The spring of rest length ``rest_length`` is mounted at height
    ``anchor_offset`` above the mass's line of travel, which makes the
    restoring force a nonlinear function of position.  All parameters must
    be positive; ``anchor_offset > rest_length`` keeps the spring stretched
    for every position, so the stiffness never degenerates.
    """

    rest_length: float = 0.17
    anchor_offset: float = 0.25
    mass: float = 5.0
    stiffness: float = 800.0
    damping: float = 10.0

    def __post_init__(self):
        for name in ("rest_length", "anchor_offset", "mass", "stiffness", "damping"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


def msd_vector_field(x: np.ndarray, u: np.ndarray, params: MsdParams = MsdParams()) -> np.ndarray:
    """State derivative of the mass-spring-damper system.

    With position/velocity state ``x = (x1, x2)`` and force input ``u``:
    ``x1' = x2`` and
    ``x2' = (F - b (1 - l / eta(x1)) x1 - c x2) / m`` where
    ``eta(x1) = sqrt(x1**2 + a**2)`` is the stretched spring length.
    """
    x1, x2 = float(x[0]), float(x[1])
    force = float(np.asarray(u).reshape(-1)[0])
    eta = np.hypot(x1, params.anchor_offset)
    accel = (
        force
        - params.stiffness * (1.0 - params.rest_length / eta) * x1
        - params.damping * x2
    ) / params.mass
    return np.array([x2, accel])


def msd_field_jacobians(x: np.ndarray, u: np.ndarray, params: MsdParams = MsdParams()) -> tuple:
    """Jacobians of :func:`msd_vector_field` with respect to state and input."""
    x1 = float(x[0])
    eta = np.hypot(x1, params.anchor_offset)
    # d/dx1 of (1 - l/eta) x1 collapses to 1 - l a^2 / eta^3
    spring_slope = 1.0 - params.rest_length * params.anchor_offset**2 / eta**3
    jx = np.array(
        [
            [0.0, 1.0],
            [-params.stiffness * spring_slope / params.mass, -params.damping / params.mass],
        ]
    )
    ju = np.array([[0.0], [1.0 / params.mass]])
    return jx, ju


def msd_system(params: MsdParams = MsdParams(), dt: float = 0.01) -> SystemModel:
    """RK4-discretized mass-spring-damper model with analytic Jacobians."""

    def field(x, u):
        return msd_vector_field(x, u, params)

    def jacobians(x, u):
        return msd_field_jacobians(x, u, params)

    return continuous_system(field, jacobians, n_x=2, n_u=1, dt=dt, name="msd")


def lti_system(
    a_d: np.ndarray, b_d: np.ndarray, name: str = "lti", sample_time: float | None = None
) -> SystemModel:
    """Discrete-time linear model ``x(k+1) = A_d x(k) + B_d u(k)``."""
    a_d = np.atleast_2d(np.asarray(a_d, dtype=float))
    b_d = np.atleast_2d(np.asarray(b_d, dtype=float))
    if a_d.shape[0] != a_d.shape[1] or b_d.shape[0] != a_d.shape[0]:
        raise ValueError(f"inconsistent matrix shapes {a_d.shape}, {b_d.shape}")
    n_x, n_u = b_d.shape

    def step(x, u):
        return a_d @ x + b_d @ u

    def jacobians(x, u):
        return a_d, b_d

    def step_and_jacobians(x, u):
        return a_d @ x + b_d @ u, a_d, b_d

    return SystemModel(
        n_x=n_x,
        n_u=n_u,
        step=step,
        jacobians=jacobians,
        step_and_jacobians=step_and_jacobians,
        name=name,
        sample_time=sample_time,
    )


def lti_from_continuous(
    a: np.ndarray, b: np.ndarray, sample_time: float, name: str = "lti"
) -> SystemModel:
    """Zero-order-hold discretization wrapped as a :class:`SystemModel`."""
    a_d, b_d = zoh_discretize(a, b, sample_time)
    return lti_system(a_d, b_d, name=name, sample_time=sample_time)


def rollout(
    system: SystemModel,
    sig: InputSignal,
    x0: np.ndarray,
    n_steps: int,
    u0: np.ndarray | None = None,
    with_sensitivities: bool = False,
) -> tuple[Trajectory, Dataset]:
    """Simulate the signal through the system and assemble the design dataset.

    The input applied at step 0 is ``u0`` (zero by default); the signal
    provides u(k, theta) for k = 1..n_steps-1 during propagation and its
    value at k = n_steps enters only the dataset.  Dataset rows are
    ``z_j = (x(j), u(j, theta))`` for j = 1..n_steps.  With sensitivities
    enabled, the recursion
    ``S(k+1) = (df/dx) S(k) + (df/du) (du(k)/dtheta)`` starts from
    ``S(0) = 0`` and each dataset row gets ``dz_j/dtheta`` stacked from the
    state and input blocks.

    Returns
    -------
    (Trajectory, Dataset)

    Raises
    ------
    TrajectoryDivergedError
        When a step produces a non-finite state; carries the failing index.
    JacobiansUnavailableError
        When sensitivities are requested from a model without Jacobians.
    """
    n = int(n_steps)
    if n < 1:
        raise ValueError(f"n_steps must be at least 1, got {n_steps}")
    if sig.horizon < n:
        raise HorizonError(f"signal horizon {sig.horizon} shorter than n_steps {n}")
    if sig.n_inputs != system.n_u:
        raise ValueError(f"signal provides {sig.n_inputs} inputs, system expects {system.n_u}")
    x0 = np.asarray(x0, dtype=float).reshape(system.n_x)
    u0 = np.zeros(system.n_u) if u0 is None else np.asarray(u0, dtype=float).reshape(system.n_u)

    u_data = np.asarray(sig.horizon_values(), dtype=float)[:n]  # u(k) for k = 1..n
    states = np.empty((n + 1, system.n_x))
    states[0] = x0

    sens = None
    point_sens = None
    if with_sensitivities:
        if not system.has_jacobians:
            # surface the capability problem before any simulation work
            system._fused(x0, u0)
        u_jac = np.asarray(sig.horizon_jacobians(), dtype=float)[:n]  # (n, n_u, n_theta)
        sens = np.zeros((n + 1, system.n_x, sig.n_theta))

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            u_k = u0 if k == 0 else u_data[k - 1]
            if with_sensitivities:
                x_next, fx, fu = system._fused(states[k], u_k)
                sens[k + 1] = fx @ sens[k]
                if k > 0:
                    sens[k + 1] += fu @ u_jac[k - 1]
            else:
                x_next = system.step(states[k], u_k)
            x_next = np.asarray(x_next, dtype=float).reshape(system.n_x)
            if not np.isfinite(x_next).all():
                raise TrajectoryDivergedError(step=k + 1)
            states[k + 1] = x_next

    if with_sensitivities:
        point_sens = np.concatenate([sens[1:], u_jac], axis=1)  # (n, n_x + n_u, n_theta)

    applied = np.vstack([u0[None, :], u_data[: n - 1]])
    trajectory = Trajectory(states, applied, sensitivities=sens)
    dataset = Dataset(
        np.hstack([states[1:], u_data]), theta=sig.theta, sensitivities=point_sens
    )
    return trajectory, dataset


def reachability_advisory(n_samples: int, n_anchors: int, coverage_horizon: int) -> str | None:
    """Advisory on whether the horizon can plausibly cover all anchors.

    A trajectory needs roughly ``coverage_horizon + 1`` samples per anchor
    (the user-supplied steps to steer between any two region points, plus
    the visit itself), so data lengths below
    ``n_anchors * (coverage_horizon + 1)`` are flagged.  Returns a warning
    message, or None when the length is sufficient.  Never blocks anything;
    the bound is a guideline, not a feasibility proof.
    """
    if coverage_horizon < 1:
        raise ValueError(f"coverage_horizon must be at least 1, got {coverage_horizon}")
    required = int(n_anchors) * (int(coverage_horizon) + 1)
    if n_samples < required:
        return (
            f"data length {n_samples} is below {required} = "
            f"{n_anchors} anchors x (coverage horizon {coverage_horizon} + 1); "
            "the trajectory may be too short to visit every anchor"
        )
    return None


def trajectory_to_csv(trajectory: Trajectory, path, final_input: np.ndarray | None = None) -> None:
    """Write a trajectory as CSV rows (k, x1..x_{n_x}, u1..u_{n_u}).

    The final state row has no applied input; ``final_input`` (typically the
    dataset's last input value) fills it when provided, otherwise the cells
    are left empty.
    """
    states = trajectory.states
    inputs = trajectory.inputs
    n_x, n_u = states.shape[1], inputs.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k"] + [f"x{i + 1}" for i in range(n_x)] + [f"u{i + 1}" for i in range(n_u)])
        for k in range(states.shape[0]):
            row = [k] + [format(v, ".17g") for v in states[k]]
            if k < inputs.shape[0]:
                row += [format(v, ".17g") for v in inputs[k]]
            elif final_input is not None:
                row += [format(v, ".17g") for v in np.asarray(final_input).reshape(n_u)]
            else:
                row += [""] * n_u
            writer.writerow(row)
