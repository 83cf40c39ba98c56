"""Grid representations of functional and volumetric time series.

A functional observation is stored by its values on a fixed grid together
with positive quadrature weights, so that inner products, norms and
covariance kernels reduce to weighted matrix algebra.  Volumetric series
(one 3-d scan per time point) use the counting measure on voxels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridDomain",
    "FunctionalSample",
    "VolumeSeries",
    "inner_product",
    "sample_mean",
    "demean",
    "detrend_polynomial",
]


@dataclass(frozen=True)
class GridDomain:
    """Discretisation of the index set of a functional observation.

    Parameters
    ----------
    points : ndarray, shape (G,)
        Strictly increasing grid nodes.
    weights : ndarray, shape (G,)
        Positive quadrature weights; ``sum(w * f * g)`` approximates the
        L2 inner product of ``f`` and ``g`` on the underlying interval.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if points.ndim != 1 or weights.shape != points.shape:
            raise ValueError("points and weights must be 1-d arrays of equal length")
        if points.size == 0:
            raise ValueError("grid must contain at least one node")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(weights))):
            raise ValueError("grid nodes and weights must be finite")
        if points.size > 1 and np.any(np.diff(points) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.points.size

    @classmethod
    def uniform(cls, n_nodes: int, a: float = 0.0, b: float = 1.0) -> "GridDomain":
        """Uniform grid on ``[a, b]`` with trapezoid quadrature weights."""
        if n_nodes < 2:
            raise ValueError("a uniform grid needs at least two nodes")
        return cls.from_points(np.linspace(a, b, n_nodes))

    @classmethod
    def from_points(cls, points) -> "GridDomain":
        """Trapezoid weights for an arbitrary strictly increasing grid."""
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 1 or points.size < 2:
            raise ValueError("need a 1-d grid with at least two nodes")
        w = np.empty_like(points)
        w[1:-1] = 0.5 * (points[2:] - points[:-2])
        w[0] = 0.5 * (points[1] - points[0])
        w[-1] = 0.5 * (points[-1] - points[-2])
        return cls(points, w)

    @classmethod
    def counting(cls, n_nodes: int) -> "GridDomain":
        """Unit-weight domain over ``n_nodes`` indexed positions."""
        if n_nodes < 1:
            raise ValueError("need at least one node")
        return cls(np.arange(n_nodes, dtype=np.float64), np.ones(n_nodes))


@dataclass(frozen=True)
class FunctionalSample:
    """A time series of curves sampled on a common grid.

    ``values[t, j]`` is observation ``t`` evaluated at ``domain.points[j]``.
    """

    values: np.ndarray
    domain: GridDomain

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("values must be a 2-d array (time x grid)")
        if values.shape[1] != self.domain.size:
            raise ValueError(
                f"sample has {values.shape[1]} nodes but domain has {self.domain.size}"
            )
        if values.shape[0] < 1:
            raise ValueError("sample must contain at least one observation")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class VolumeSeries:
    """A time series of 3-d volumes, ``values[t, x, y, z]``."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 4:
            raise ValueError("values must be a 4-d array (time x nx x ny x nz)")
        if min(values.shape) < 1:
            raise ValueError("all dimensions must be non-empty")
        if not np.all(np.isfinite(values)):
            raise ValueError("volume values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape[1:]

    def flatten(self) -> FunctionalSample:
        """View the voxel grid as a flat domain with counting measure."""
        n = self.n_obs
        flat = self.values.reshape(n, -1)
        return FunctionalSample(flat, GridDomain.counting(flat.shape[1]))


def inner_product(f: np.ndarray, g: np.ndarray, domain: GridDomain) -> np.ndarray:
    """Quadrature inner product ``sum_j w_j f(s_j) g(s_j)``.

    ``f`` and ``g`` may be single curves of shape (G,) or stacks whose last
    axis runs over the grid; broadcasting applies.
    """
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape[-1] != domain.size or g.shape[-1] != domain.size:
        raise ValueError("last axis must match the grid size")
    return np.sum(domain.weights * f * g, axis=-1)


def sample_mean(x: FunctionalSample) -> np.ndarray:
    """Pointwise mean curve of the sample."""
    return x.values.mean(axis=0)


def demean(x: FunctionalSample) -> FunctionalSample:
    """Subtract the sample mean curve from every observation."""
    return FunctionalSample(x.values - x.values.mean(axis=0), x.domain)


def _polynomial_residuals(values: np.ndarray, order: int) -> np.ndarray:
    """Residuals of each column of ``values`` after a polynomial fit in time.

    The fit uses an orthonormalised polynomial design (QR of a Vandermonde
    matrix on [-1, 1]), so the residuals are orthogonal to every monomial up
    to the requested order, including the constant.
    """
    n = values.shape[0]
    if order < 0:
        raise ValueError("order must be non-negative")
    if n <= order + 1:
        raise ValueError(f"need more than order+1={order + 1} time points, got {n}")
    t = np.linspace(-1.0, 1.0, n)
    design = np.vander(t, order + 1, increasing=True)
    q, _ = np.linalg.qr(design)
    return values - q @ (q.T @ values)


def detrend_polynomial(x, order: int = 3):
    """Remove a per-location polynomial trend in time.

    Accepts a :class:`VolumeSeries` (voxelwise detrend) or a
    :class:`FunctionalSample` (nodewise detrend) and returns the same type
    holding the fit residuals.
    """
    if isinstance(x, VolumeSeries):
        flat = x.values.reshape(x.n_obs, -1)
        res = _polynomial_residuals(flat, order)
        return VolumeSeries(res.reshape(x.values.shape))
    if isinstance(x, FunctionalSample):
        return FunctionalSample(_polynomial_residuals(x.values, order), x.domain)
    raise TypeError("expected a VolumeSeries or FunctionalSample")
