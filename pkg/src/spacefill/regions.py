"""Regions of interest, anchor grids, and the filling-distance metric.

The region of interest is an axis-aligned box in the joint input-state
space.  Coverage of a dataset is judged by the filling distance: the radius
of the largest ball inside the region that contains no dataset point, under
a diagonally weighted norm.  The continuum maximum is approximated on an
endpoint-inclusive evaluation grid (default 100 points per dimension), which
is also how reference values in the test suite were produced, so the grid
resolution is part of every reported number.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DatasetParseError, EmptyDatasetError
from .gp import AnchorSet, Dataset

__all__ = [
    "RegionOfInterest",
    "MetricWeight",
    "evaluation_grid",
    "uniform_anchor_grid",
    "filling_distance",
    "anchor_epsilon",
    "largest_empty_ball",
    "points_to_csv",
    "points_from_csv",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class RegionOfInterest:
    """Axis-aligned box in the joint input-state space.

    Coordinates follow the canonical state-then-input order used everywhere
    in this package.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError(f"lower/upper must be vectors of equal length, got {lo.shape} and {hi.shape}")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("region bounds must be finite")
        if not np.all(lo < hi):
            raise ValueError("region requires lower < upper in every coordinate")
        object.__setattr__(self, "lower", _readonly(lo))
        object.__setattr__(self, "upper", _readonly(hi))

    @property
    def n_dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, points: np.ndarray, atol: float = 1e-9) -> np.ndarray:
        """Boolean mask of rows lying inside the box (within ``atol``)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.logical_and(
            (pts >= self.lower - atol).all(axis=1),
            (pts <= self.upper + atol).all(axis=1),
        )


@dataclass(frozen=True)
class MetricWeight:
    """Diagonal weight of the norm used by the filling distance.

    The distance between points ``a`` and ``b`` is
    ``sqrt(sum(diagonal * (a - b)**2))``.  Typical use normalizes each
    coordinate by its region half-width squared so all axes contribute
    comparably.
    """

    diagonal: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.diagonal, dtype=float))
        if d.ndim != 1 or not np.all(d > 0) or not np.isfinite(d).all():
            raise ValueError("metric diagonal must be a vector of positive finite reals")
        object.__setattr__(self, "diagonal", _readonly(d))

    @property
    def n_dim(self) -> int:
        return self.diagonal.shape[0]

    @property
    def scale(self) -> np.ndarray:
        """Per-coordinate factor mapping raw coordinates to unit-weight space."""
        return np.sqrt(self.diagonal)

    @staticmethod
    def identity(n_dim: int) -> "MetricWeight":
        return MetricWeight(np.ones(n_dim))

    @staticmethod
    def from_half_widths(half_widths: np.ndarray) -> "MetricWeight":
        """Weight ``1 / w**2`` per coordinate, normalizing each axis by ``w``."""
        w = np.atleast_1d(np.asarray(half_widths, dtype=float))
        return MetricWeight(1.0 / w**2)


def _per_dim_counts(region: RegionOfInterest, points_per_dim, minimum: int) -> np.ndarray:
    counts = np.broadcast_to(np.asarray(points_per_dim, dtype=int), (region.n_dim,)).copy()
    if np.any(counts < minimum):
        raise ValueError(f"need at least {minimum} points per dimension, got {counts.tolist()}")
    return counts


def evaluation_grid(region: RegionOfInterest, points_per_dim) -> np.ndarray:
    """Endpoint-inclusive rectangular grid over the region, in C order.

    Rows enumerate the Cartesian product with the first coordinate varying
    slowest; "lowest grid index" in tie-breaking rules refers to this order.
    """
    counts = _per_dim_counts(region, points_per_dim, 2)
    axes = [np.linspace(region.lower[i], region.upper[i], counts[i]) for i in range(region.n_dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def _as_points(data) -> np.ndarray:
    pts = data.points if isinstance(data, (Dataset, AnchorSet)) else np.asarray(data, dtype=float)
    pts = np.atleast_2d(pts)
    if pts.shape[0] == 0:
        raise EmptyDatasetError("filling distance is undefined for an empty dataset")
    return pts


def _min_distances(
    data, region: RegionOfInterest, metric: MetricWeight | None, eval_points_per_dim
) -> tuple[np.ndarray, np.ndarray]:
    """Distance from every evaluation-grid point to its nearest dataset point."""
    pts = _as_points(data)
    if metric is None:
        metric = MetricWeight.identity(region.n_dim)
    if pts.shape[1] != region.n_dim or metric.n_dim != region.n_dim:
        raise ValueError(
            f"dimension mismatch: points {pts.shape[1]}, region {region.n_dim}, metric {metric.n_dim}"
        )
    grid = evaluation_grid(region, eval_points_per_dim)
    scale = metric.scale
    tree = cKDTree(pts * scale)
    dist, _ = tree.query(grid * scale, k=1)
    return dist, grid


def filling_distance(
    data, region: RegionOfInterest, metric: MetricWeight | None = None, eval_points_per_dim=100
) -> float:
    """Largest weighted distance from the region to the nearest dataset point.

    Parameters
    ----------
    data : Dataset, AnchorSet, or array of shape (N, n_z)
        Points whose coverage of the region is being measured.
    region : RegionOfInterest
        Box over which coverage is required.
    metric : MetricWeight, optional
        Diagonal norm weight; identity when omitted.
    eval_points_per_dim : int or sequence of int, optional
        Resolution of the endpoint-inclusive evaluation grid.  Reported
        values depend on it, so it is part of any quoted result.

    Returns
    -------
    float
        ``max over grid of min over data of weighted distance``; zero exactly
        when the dataset contains every evaluation-grid point.
    """
    dist, _ = _min_distances(data, region, metric, eval_points_per_dim)
    return float(dist.max())


def largest_empty_ball(
    data, region: RegionOfInterest, metric: MetricWeight | None = None, eval_points_per_dim=100
) -> tuple[np.ndarray, float]:
    """Center and radius of the largest data-free ball found on the grid.

    The radius equals :func:`filling_distance` on the same grid.  Ties are
    broken toward the lowest grid index in the C-order enumeration of
    :func:`evaluation_grid`.
    """
    dist, grid = _min_distances(data, region, metric, eval_points_per_dim)
    idx = int(np.argmax(dist))
    return grid[idx].copy(), float(dist[idx])


def anchor_epsilon(
    anchors: AnchorSet,
    region: RegionOfInterest,
    metric: MetricWeight | None = None,
    eval_points_per_dim=100,
) -> float:
    """Filling distance of the anchor set itself.

    This is the coverage radius the anchors guarantee: driving the mean
    anchor variance to zero puts a trajectory point at every anchor, so the
    trajectory's filling distance can be no worse than this value.
    """
    if not bool(region.contains(anchors.points).all()):
        raise ValueError("anchor set must lie inside the region of interest")
    return filling_distance(anchors.points, region, metric, eval_points_per_dim)


def uniform_anchor_grid(
    region: RegionOfInterest,
    points_per_dim,
    metric: MetricWeight | None = None,
    eval_points_per_dim=100,
    compute_epsilon: bool = True,
) -> AnchorSet:
    """Endpoint-inclusive uniform anchor grid over the region.

    Each dimension gets ``points_per_dim`` equally spaced values including
    both endpoints; the anchor count is their product.  Unless disabled, the
    grid's own filling distance is evaluated and stored as ``epsilon``.
    """
    counts = _per_dim_counts(region, points_per_dim, 2)
    points = evaluation_grid(region, counts)
    eps = None
    if compute_epsilon:
        eps = filling_distance(points, region, metric, eval_points_per_dim)
    return AnchorSet(points, epsilon=eps)


def points_to_csv(points: np.ndarray, path) -> None:
    """Write points as CSV, one point per row, full float precision."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in pts:
            writer.writerow([format(v, ".17g") for v in row])


def points_from_csv(path) -> np.ndarray:
    """Read points from CSV, one point per row.

    A single leading non-numeric row is treated as a header.  Any other
    non-numeric or ragged row raises :class:`DatasetParseError` carrying its
    1-based line number.
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        for line_no, record in enumerate(csv.reader(fh), start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            try:
                row = [float(cell) for cell in record]
            except ValueError:
                if not rows and width is None:
                    width = len(record)  # header row fixes the expected width
                    continue
                raise DatasetParseError("non-numeric value", line=line_no) from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DatasetParseError(
                    f"expected {width} columns, found {len(row)}", line=line_no
                )
            rows.append(row)
    if not rows:
        raise EmptyDatasetError(f"no data rows in {path}")
    return np.asarray(rows, dtype=float)
