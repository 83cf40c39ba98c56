"""Score projections and the product series the tests operate on.

Scores are quadrature inner products of the demeaned observations with an
eigenbasis.  The object actually monitored for a covariance change is the
half-vectorised outer product of the score vector: for ``d`` scores this
is the ``d*(d+1)/2`` series ``(s_1^2, s_1 s_2, ..., s_1 s_d, s_2^2,
s_2 s_3, ..., s_d^2)``.  A change in the covariance operator appears as a
mean shift in some of these products, so variance estimation first removes
the best single split (or episode) per component.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FunctionalSample, VolumeSeries
from .covariance import EigenSystem, SeparableEigenSystem

__all__ = [
    "ScoreMatrix",
    "ScoreProductSeries",
    "ResidualSeries",
    "LongRunDiag",
    "compute_scores",
    "vech_products",
    "estimate_component_changepoint",
    "estimate_component_episode",
    "correct_residuals",
    "block_longrun_variance",
    "gaussian_sigma_diag",
    "default_block_length",
]


@dataclass(frozen=True)
class ScoreMatrix:
    """Projection scores, one row per time point, one column per component."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("scores must be 2-d (time x component)")
        object.__setattr__(self, "values", values)

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_components(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ScoreProductSeries:
    """Half-vectorised score products; ``pair_index[i] = (l1, l2)``, 0-based."""

    values: np.ndarray
    pair_index: np.ndarray

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_components(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ResidualSeries:
    """Product series with estimated segment means removed per component.

    ``changepoints`` has shape (d,) for a single split per component and
    (d, 2) for an episode (change and reversion), 1-based time indices.
    """

    values: np.ndarray
    changepoints: np.ndarray

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_components(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LongRunDiag:
    """Diagonal long-run variance estimates; ``block_length`` 0 means analytic."""

    variances: np.ndarray
    block_length: int


def default_block_length(n: int) -> int:
    """Cube-root block length, ``round(n ** (1/3))``."""
    return max(1, int(round(n ** (1.0 / 3.0))))


def compute_scores(x, basis) -> ScoreMatrix:
    """Project demeaned observations onto an eigenbasis.

    Parameters
    ----------
    x : FunctionalSample or VolumeSeries
        The sample; volumes require a :class:`SeparableEigenSystem`.
    basis : EigenSystem or SeparableEigenSystem
        Basis to project on.  For the separable case the projection
        contracts one axis at a time, which is how a tensor basis stays
        affordable on large grids.
    """
    if isinstance(basis, EigenSystem):
        if not isinstance(x, FunctionalSample):
            raise TypeError("a plain eigenbasis requires a FunctionalSample")
        if x.n_nodes != basis.domain.size:
            raise ValueError("sample and basis live on different grids")
        centered = x.values - x.values.mean(axis=0)
        weighted = basis.eigenfunctions * basis.domain.weights[:, None]
        return ScoreMatrix(centered @ weighted)
    if isinstance(basis, SeparableEigenSystem):
        if not isinstance(x, VolumeSeries):
            raise TypeError("a separable eigenbasis requires a VolumeSeries")
        ax, ay, az = basis.axes
        if x.dims != (ax.domain.size, ay.domain.size, az.domain.size):
            raise ValueError("volume and basis dimensions disagree")
        centered = x.values - x.values.mean(axis=0)
        part = np.einsum("txyz,xa->tayz", centered, ax.eigenfunctions)
        part = np.einsum("tayz,yb->tabz", part, ay.eigenfunctions)
        part = np.einsum("tabz,zc->tabc", part, az.eigenfunctions)
        ti = basis.tensor_index
        return ScoreMatrix(part[:, ti[:, 0], ti[:, 1], ti[:, 2]])
    raise TypeError("basis must be an EigenSystem or SeparableEigenSystem")


def vech_products(scores: ScoreMatrix) -> ScoreProductSeries:
    """All pairwise score products with ``l1 <= l2`` in row-major order."""
    s = scores.values
    i1, i2 = np.triu_indices(s.shape[1])
    pairs = np.column_stack([i1, i2]).astype(np.int64)
    return ScoreProductSeries(s[:, i1] * s[:, i2], pairs)


def _cusum(q: np.ndarray) -> np.ndarray:
    """Centered partial sums: row k-1 holds ``sum_{t<=k} q_t - (k/n) sum q``."""
    n = q.shape[0]
    cs = np.cumsum(q, axis=0)
    frac = np.arange(1, n + 1, dtype=np.float64)[:, None] / n
    return cs - frac * cs[-1]


def estimate_component_changepoint(q: np.ndarray) -> int:
    """Largest absolute centered partial sum, 1-based, ties to the smallest k.

    The argmax runs over ``k = 1..n-1``; the returned index is the last
    time point of the pre-change segment.
    """
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    n = q.size
    if n < 2:
        raise ValueError("need at least two observations")
    c = _cusum(q[:, None])[:, 0]
    return int(np.argmax(np.abs(c[: n - 1]))) + 1


def estimate_component_episode(q: np.ndarray) -> tuple[int, int]:
    """Pair ``(k1, k2)`` maximising ``|C_{k2} - C_{k1}|`` over ``k1 < k2 <= n-1``.

    ``C`` is the centered partial sum process of the component.  Both
    directions of the difference are scanned with running extrema, so the
    estimate is exact in O(n).  Ties resolve to the earliest pair found.
    """
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    n = q.size
    if n < 3:
        raise ValueError("need at least three observations for an episode")
    c = _cusum(q[:, None])[:, 0][: n - 1]
    best_up = -np.inf
    best_dn = -np.inf
    up_pair = (1, 2)
    dn_pair = (1, 2)
    min_val = c[0]
    min_idx = 0
    max_val = c[0]
    max_idx = 0
    for b in range(1, n - 1):
        if c[b] - min_val > best_up:
            best_up = c[b] - min_val
            up_pair = (min_idx + 1, b + 1)
        if max_val - c[b] > best_dn:
            best_dn = max_val - c[b]
            dn_pair = (max_idx + 1, b + 1)
        if c[b] < min_val:
            min_val = c[b]
            min_idx = b
        if c[b] > max_val:
            max_val = c[b]
            max_idx = b
    return up_pair if best_up >= best_dn else dn_pair


def correct_residuals(q, alternative: str = "amoc") -> ResidualSeries:
    """Remove per-component segment means around the estimated change.

    For ``alternative="amoc"`` each component is split at its own
    estimated change point and both segment means are subtracted.  For
    ``"epidemic"`` an episode ``(k1, k2]`` is estimated per component and
    the three segment means are removed.
    """
    values = q.values if isinstance(q, ScoreProductSeries) else np.asarray(q, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    n, d = values.shape
    out = np.empty_like(values)
    if alternative == "amoc":
        changepoints = np.empty(d, dtype=np.int64)
        for i in range(d):
            k = estimate_component_changepoint(values[:, i])
            changepoints[i] = k
            col = values[:, i]
            out[:k, i] = col[:k] - col[:k].mean()
            out[k:, i] = col[k:] - col[k:].mean()
    elif alternative == "epidemic":
        changepoints = np.empty((d, 2), dtype=np.int64)
        for i in range(d):
            k1, k2 = estimate_component_episode(values[:, i])
            changepoints[i] = (k1, k2)
            col = values[:, i]
            out[:k1, i] = col[:k1] - col[:k1].mean()
            out[k1:k2, i] = col[k1:k2] - col[k1:k2].mean()
            out[k2:, i] = col[k2:] - col[k2:].mean()
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    return ResidualSeries(out, changepoints)


def block_longrun_variance(r, block_length: int) -> LongRunDiag:
    """Non-overlapping block estimator of the long-run variance diagonal.

    With ``L = n // K`` full blocks the estimate for component ``i`` is
    ``(1/n) * sum_j (sum of block j)**2``; trailing observations beyond
    ``L * K`` are ignored.
    """
    values = r.values if isinstance(r, ResidualSeries) else np.asarray(r, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    n, d = values.shape
    k = int(block_length)
    if not 1 <= k <= n:
        raise ValueError(f"block length must be in [1, {n}], got {k}")
    nb = n // k
    sums = values[: nb * k].reshape(nb, k, d).sum(axis=1)
    return LongRunDiag((sums**2).sum(axis=0) / n, k)


def gaussian_sigma_diag(eigenvalues: np.ndarray) -> LongRunDiag:
    """Long-run diagonal for independent Gaussian scores.

    For score variances ``lam``, the product ``(l, l)`` has long-run
    variance ``2 * lam_l**2`` and ``(l1, l2)`` with ``l1 != l2`` has
    ``lam_l1 * lam_l2``, laid out in the half-vectorised order.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64).reshape(-1)
    if np.any(lam < 0):
        raise ValueError("variances must be non-negative")
    i1, i2 = np.triu_indices(lam.size)
    diag = np.where(i1 == i2, 2.0 * lam[i1] ** 2, lam[i1] * lam[i2])
    return LongRunDiag(diag, 0)
