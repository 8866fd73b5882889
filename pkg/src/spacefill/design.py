"""The space-filling design cost and its parameter gradient.

A :class:`DesignProblem` fixes everything except the signal parameters:
system, signal family, initial conditions, horizon, anchor set, and kernel.
The cost of a parameter vector is the mean GP posterior variance at the
anchors after conditioning on the joint points generated by rolling the
signal through the system.  Driving it to zero forces the trajectory to
interpolate every anchor, which is what makes it a space-filling objective.

The analytic gradient chains three layers: the kernel terms of the posterior
variance, the dataset points, and the trajectory sensitivities delivered by
the rollout.  Writing ``A = K^-1 K_star`` (Gram solve against the
anchor cross-covariances), the derivative of the cost with respect to a
dataset point z_j collects one term from the cross-covariance row and one
from the Gram row; both reduce to row sums of the Hadamard products
``B = A o K_star`` and ``E = K0 o (A A^T)``, so the whole gradient costs a
few matrix products on top of the factorization the cost already needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .dynamics import SystemModel, rollout
from .errors import IllConditionedGramError
from .gp import AnchorSet, Dataset, KernelConfig, kernel_matrix
from .signals import InputSignal

__all__ = [
    "DesignProblem",
    "design_cost",
    "design_cost_gradient",
    "design_cost_with_gradient",
]


@dataclass(frozen=True)
class DesignProblem:
    """Immutable bundle defining one input-design instance.

    ``joint_coordinates`` selects which coordinates of the joint point
    ``(x_1..x_{n_x}, u_1..u_{n_u})`` span the design space; the anchor set,
    kernel, and region metric all live in that selected space.  None selects
    every coordinate.  ``n_samples`` defaults to the signal horizon.
    """

    system: SystemModel
    signal: InputSignal
    anchors: AnchorSet
    kernel: KernelConfig
    x0: np.ndarray
    u0: np.ndarray | None = None
    n_samples: int | None = None
    joint_coordinates: tuple | None = None

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float).reshape(self.system.n_x)
        x0.flags.writeable = False
        object.__setattr__(self, "x0", x0)
        if self.u0 is not None:
            u0 = np.asarray(self.u0, dtype=float).reshape(self.system.n_u)
            u0.flags.writeable = False
            object.__setattr__(self, "u0", u0)
        n = self.signal.horizon if self.n_samples is None else int(self.n_samples)
        if n < 1:
            raise ValueError(f"n_samples must be at least 1, got {self.n_samples}")
        object.__setattr__(self, "n_samples", n)
        n_z = self.system.n_x + self.system.n_u
        if self.joint_coordinates is not None:
            coords = tuple(int(c) for c in self.joint_coordinates)
            if len(set(coords)) != len(coords) or any(not 0 <= c < n_z for c in coords):
                raise ValueError(
                    f"joint_coordinates must be distinct indices below {n_z}, got {coords}"
                )
            object.__setattr__(self, "joint_coordinates", coords)
        n_dim = len(self.joint_coordinates) if self.joint_coordinates else n_z
        if self.anchors.n_dim != n_dim or self.kernel.n_dim != n_dim:
            raise ValueError(
                f"design space has {n_dim} coordinates but anchors have {self.anchors.n_dim} "
                f"and kernel has {self.kernel.n_dim}"
            )

    @property
    def n_design_dims(self) -> int:
        return self.anchors.n_dim

    def select_points(self, points: np.ndarray) -> np.ndarray:
        """Joint points restricted to the design-space coordinates."""
        if self.joint_coordinates is None:
            return points
        return points[:, list(self.joint_coordinates)]


def _rollout_for(theta: np.ndarray, problem: DesignProblem, with_sensitivities: bool) -> Dataset:
    sig = problem.signal.with_theta(theta)
    _, dataset = rollout(
        problem.system,
        sig,
        problem.x0,
        problem.n_samples,
        u0=problem.u0,
        with_sensitivities=with_sensitivities,
    )
    return dataset


def _factorized_terms(z: np.ndarray, problem: DesignProblem):
    """Gram factorization and anchor cross-covariances shared by cost and gradient."""
    cfg = problem.kernel
    k0 = kernel_matrix(z, z, cfg)
    k0 = 0.5 * (k0 + k0.T)
    k = k0.copy()
    if cfg.jitter:
        k[np.diag_indices_from(k)] += cfg.jitter
    try:
        chol = cholesky(k, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedGramError(
            f"Cholesky factorization failed for a {k.shape[0]}x{k.shape[0]} Gram matrix "
            f"with jitter={cfg.jitter!r}"
        ) from exc
    k_star = kernel_matrix(z, problem.anchors.points, cfg)
    return k0, chol, k_star


def _anchor_cost(chol: np.ndarray, k_star: np.ndarray, cfg: KernelConfig) -> float:
    v = solve_triangular(chol, k_star, lower=True, check_finite=False)
    variances = cfg.signal_variance - np.einsum("nm,nm->m", v, v)
    return float(np.mean(np.clip(variances, 0.0, cfg.signal_variance)))


def design_cost(theta: np.ndarray, problem: DesignProblem) -> tuple[float, Dataset]:
    """Mean anchor variance of the trajectory generated by ``theta``.

    Returns the cost together with the full joint dataset (all state and
    input coordinates, before any design-space selection) so callers can
    evaluate coverage metrics or export the points.

    Raises
    ------
    TrajectoryDivergedError
        When the simulation produces a non-finite state.
    """
    theta = np.asarray(theta, dtype=float)
    dataset = _rollout_for(theta, problem, with_sensitivities=False)
    z = problem.select_points(dataset.points)
    _, chol, k_star = _factorized_terms(z, problem)
    return _anchor_cost(chol, k_star, problem.kernel), dataset


def design_cost_with_gradient(
    theta: np.ndarray, problem: DesignProblem
) -> tuple[float, Dataset, np.ndarray]:
    """Cost, dataset, and analytic gradient in one shared evaluation.

    Requires system Jacobians; the signal supplies its own parameter
    Jacobian.  Shares the rollout and the Gram factorization between the
    cost and the gradient.
    """
    theta = np.asarray(theta, dtype=float)
    dataset = _rollout_for(theta, problem, with_sensitivities=True)
    z = problem.select_points(dataset.points)
    point_sens = dataset.sensitivities  # (N, n_z, n_theta)
    if problem.joint_coordinates is not None:
        point_sens = point_sens[:, list(problem.joint_coordinates), :]

    cfg = problem.kernel
    k0, chol, k_star = _factorized_terms(z, problem)
    a = cho_solve((chol, True), k_star, check_finite=False)  # K^-1 K_star, (N, M)
    variances = cfg.signal_variance - np.einsum("nm,nm->m", k_star, a)
    cost = float(np.mean(np.clip(variances, 0.0, cfg.signal_variance)))

    # dV/dz_j, split into the cross-covariance term and the Gram term
    b = a * k_star
    e = k0 * (a @ a.T)
    t1 = b.sum(axis=1)[:, None] * z - b @ problem.anchors.points
    t2 = e.sum(axis=1)[:, None] * z - e @ z
    scaled = (t1 - t2) / cfg.lengthscales**2
    m = len(problem.anchors)
    grad = (2.0 / m) * np.einsum("nz,nzt->t", scaled, point_sens)
    return cost, dataset, grad


def design_cost_gradient(
    theta: np.ndarray, problem: DesignProblem, method: str = "analytic"
) -> np.ndarray:
    """Gradient of the design cost with respect to the signal parameters.

    ``method`` selects the sensitivity-based analytic path or central finite
    differences with per-coordinate step ``max(1e-6, 1e-6 |theta_i|)``.  The
    finite-difference path needs only simulation, no Jacobians, and serves
    as the independent check on the analytic one.
    """
    theta = np.asarray(theta, dtype=float)
    if method == "analytic":
        return design_cost_with_gradient(theta, problem)[2]
    if method != "central-fd":
        raise ValueError(f"unknown gradient method {method!r}")
    grad = np.empty(theta.shape[0])
    for i in range(theta.shape[0]):
        h = max(1e-6, 1e-6 * abs(theta[i]))
        bumped = theta.copy()
        bumped[i] = theta[i] + h
        hi, _ = design_cost(bumped, problem)
        bumped[i] = theta[i] - h
        lo, _ = design_cost(bumped, problem)
        grad[i] = (hi - lo) / (2.0 * h)
    return grad
