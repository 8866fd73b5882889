"""Gaussian-process machinery for space-filling design.

The coverage cost used everywhere in this package is the GP posterior
variance, averaged over a fixed set of anchor points.  Because the posterior
variance depends only on the *input locations* of the conditioning data (not
on any output values), it measures how well a point cloud covers the anchors:
it is zero exactly at data points and grows with distance to the nearest ones.

All functions here are pure and safe to call concurrently.  Reductions over
anchors use a fixed summation order (anchor index order), so repeated calls
with identical inputs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist

from .errors import EmptyDatasetError, IllConditionedGramError

__all__ = [
    "KernelConfig",
    "Dataset",
    "AnchorSet",
    "default_jitter",
    "seard_kernel",
    "kernel_matrix",
    "gram_matrix",
    "cholesky_gram",
    "posterior_variance",
    "posterior_mean",
    "anchor_variances",
    "mean_anchor_variance",
]

#: Relative jitter applied by :func:`default_jitter`.  Large enough to keep
#: the Cholesky factorization alive when trajectory points coincide, small
#: enough to leave the posterior variance untouched at test tolerances.
DEFAULT_JITTER_SCALE = 1e-8


def default_jitter(signal_variance: float) -> float:
    """Default diagonal jitter, scaled to the kernel's signal variance."""
    return DEFAULT_JITTER_SCALE * float(signal_variance)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class KernelConfig:
    """Hyperparameters of the squared-exponential ARD kernel.

    Parameters
    ----------
    signal_variance : float
        Prior variance at zero distance; must be positive.
    lengthscales : array_like
        One positive lengthscale per joint-space coordinate.
    jitter : float, optional
        Non-negative value added to the Gram diagonal.  Zero disables it,
        which is only safe when all data points are distinct.
    """

    signal_variance: float
    lengthscales: np.ndarray
    jitter: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lengthscales", _readonly(np.atleast_1d(self.lengthscales)))
        if not self.signal_variance > 0:
            raise ValueError(f"signal_variance must be positive, got {self.signal_variance}")
        if self.lengthscales.ndim != 1 or not np.all(self.lengthscales > 0):
            raise ValueError("lengthscales must be a vector of positive reals")
        if self.jitter < 0:
            raise ValueError(f"jitter must be non-negative, got {self.jitter}")

    @property
    def n_dim(self) -> int:
        return self.lengthscales.shape[0]

    def with_jitter(self, jitter: float) -> "KernelConfig":
        return KernelConfig(self.signal_variance, self.lengthscales, jitter)


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of joint input-state points.

    ``points`` has shape ``(N, n_z)`` with each row a joint point in canonical
    state-then-input order.  ``theta`` optionally records the signal parameter
    vector that generated the points; ``sensitivities`` (shape
    ``(N, n_z, n_theta)``) optionally records the derivative of each point
    with respect to that vector.
    """

    points: np.ndarray
    theta: np.ndarray | None = None
    sensitivities: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"points must be a 2-d array, got shape {pts.shape}")
        object.__setattr__(self, "points", _readonly(pts))
        if self.theta is not None:
            object.__setattr__(self, "theta", _readonly(np.atleast_1d(self.theta)))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def n_dim(self) -> int:
        return self.points.shape[1]

    @staticmethod
    def empty(n_dim: int) -> "Dataset":
        return Dataset(np.empty((0, n_dim)))


@dataclass(frozen=True)
class AnchorSet:
    """Fixed points representing a region of interest.

    ``epsilon`` is the anchor set's own filling distance under the metric it
    was built with; ``None`` when it has not been evaluated.
    """

    points: np.ndarray
    epsilon: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("an anchor set needs at least one point")
        object.__setattr__(self, "points", _readonly(pts))
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def n_dim(self) -> int:
        return self.points.shape[1]


def _check_dims(n_dim: int, cfg: KernelConfig, what: str):
    if cfg.n_dim != n_dim:
        raise ValueError(
            f"{what}: kernel has {cfg.n_dim} lengthscales but points have dimension {n_dim}"
        )


def seard_kernel(a: np.ndarray, b: np.ndarray, cfg: KernelConfig) -> float:
    """Squared-exponential ARD covariance between two joint points.

    ``k(a, b) = s2 * exp(-0.5 * sum(((a - b) / ell)**2))`` where ``s2`` is the
    signal variance and ``ell`` the per-coordinate lengthscales.  Symmetric in
    its arguments, with values in ``(0, s2]``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"points must be vectors of equal length, got {a.shape} and {b.shape}")
    _check_dims(a.shape[0], cfg, "seard_kernel")
    r = (a - b) / cfg.lengthscales
    return float(cfg.signal_variance * np.exp(-0.5 * np.dot(r, r)))


def kernel_matrix(xa: np.ndarray, xb: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Cross-covariance matrix ``[k(xa_i, xb_j)]`` without jitter."""
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    _check_dims(xa.shape[1], cfg, "kernel_matrix")
    _check_dims(xb.shape[1], cfg, "kernel_matrix")
    sq = cdist(xa / cfg.lengthscales, xb / cfg.lengthscales, metric="sqeuclidean")
    return cfg.signal_variance * np.exp(-0.5 * sq)


def gram_matrix(data: Dataset, cfg: KernelConfig) -> np.ndarray:
    """Kernel Gram matrix of a dataset, with ``cfg.jitter`` on the diagonal.

    Symmetric by construction; positive definite whenever ``jitter > 0``.
    """
    if len(data) == 0:
        raise EmptyDatasetError("gram_matrix needs at least one point")
    K = kernel_matrix(data.points, data.points, cfg)
    # enforce exact symmetry against cdist rounding asymmetries
    K = 0.5 * (K + K.T)
    if cfg.jitter:
        K[np.diag_indices_from(K)] += cfg.jitter
    return K


def cholesky_gram(points: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Lower-triangular Cholesky factor of the jittered Gram matrix.

    Raises
    ------
    IllConditionedGramError
        When factorization fails; the message names the jitter and size so
        the offending configuration is identifiable.
    """
    K = kernel_matrix(points, points, cfg)
    K = 0.5 * (K + K.T)
    if cfg.jitter:
        K[np.diag_indices_from(K)] += cfg.jitter
    try:
        return cholesky(K, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedGramError(
            f"Cholesky factorization failed for a {K.shape[0]}x{K.shape[0]} Gram matrix "
            f"with jitter={cfg.jitter!r} (duplicate or near-duplicate points with too "
            f"little jitter?)"
        ) from exc


def posterior_variance(query: np.ndarray, data: Dataset, cfg: KernelConfig) -> float:
    """GP posterior variance at ``query`` after conditioning on ``data``.

    Computed via a Cholesky solve as ``k(q, q) - k(q, Z) K^-1 k(q, Z)^T`` and
    clamped to ``[0, k(q, q)]`` to absorb floating-point cancellation.  An
    empty dataset returns the prior variance ``k(q, q)``.
    """
    query = np.atleast_1d(np.asarray(query, dtype=float))
    _check_dims(query.shape[0], cfg, "posterior_variance")
    prior = cfg.signal_variance
    if len(data) == 0:
        return float(prior)
    L = cholesky_gram(data.points, cfg)
    k_star = kernel_matrix(data.points, query[None, :], cfg)[:, 0]
    v = solve_triangular(L, k_star, lower=True, check_finite=False)
    var = prior - float(v @ v)
    return float(min(max(var, 0.0), prior))


def posterior_mean(query: np.ndarray, data: Dataset, outputs: np.ndarray, cfg: KernelConfig) -> float:
    """GP posterior mean at ``query`` for training outputs ``outputs``.

    Provided as a correctness aid for the GP layer; the design cost never
    uses it (coverage depends on input locations only).
    """
    query = np.atleast_1d(np.asarray(query, dtype=float))
    outputs = np.atleast_1d(np.asarray(outputs, dtype=float))
    if len(data) < 1:
        raise EmptyDatasetError("posterior_mean needs at least one training point")
    if outputs.shape != (len(data),):
        raise ValueError(f"outputs must have length {len(data)}, got shape {outputs.shape}")
    L = cholesky_gram(data.points, cfg)
    k_star = kernel_matrix(data.points, query[None, :], cfg)[:, 0]
    alpha = cho_solve((L, True), outputs, check_finite=False)
    return float(k_star @ alpha)


def anchor_variances(data: Dataset, anchors: AnchorSet, cfg: KernelConfig) -> np.ndarray:
    """Posterior variance at every anchor point, clamped to ``[0, prior]``.

    One Cholesky factorization serves all anchors.
    """
    prior = cfg.signal_variance
    if len(data) == 0:
        return np.full(len(anchors), float(prior))
    if data.n_dim != anchors.n_dim:
        raise ValueError(
            f"dataset dimension {data.n_dim} does not match anchor dimension {anchors.n_dim}"
        )
    L = cholesky_gram(data.points, cfg)
    k_star = kernel_matrix(data.points, anchors.points, cfg)  # (N, M)
    v = solve_triangular(L, k_star, lower=True, check_finite=False)
    var = prior - np.einsum("nm,nm->m", v, v)
    return np.clip(var, 0.0, prior)


def mean_anchor_variance(data: Dataset, anchors: AnchorSet, cfg: KernelConfig) -> float:
    """Space-filling cost: mean posterior variance over the anchor set.

    Zero exactly when every anchor coincides with a data point; equal to the
    prior variance for an empty dataset.  Anchors are averaged in index
    order, so the value is reproducible bit-for-bit.
    """
    return float(np.mean(anchor_variances(data, anchors, cfg)))
