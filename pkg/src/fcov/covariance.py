"""Empirical covariance kernels and their eigenstructure.

The covariance kernel of a demeaned sample is ``c(u, s) = (1/n) *
sum_t (X_t - mean)(u) (X_t - mean)(s)``.  Its eigenpairs under the
quadrature inner product drive every projection used by the tests.  Two
routes are available: a direct decomposition of the G x G kernel and a
dual route through the n x n Gram matrix of the observations, which is
much cheaper when the grid is finer than the sample is long and shares
the same non-zero spectrum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FunctionalSample, GridDomain, VolumeSeries

__all__ = [
    "CovarianceKernel",
    "EigenSystem",
    "SeparableEigenSystem",
    "empirical_covariance",
    "eigendecompose",
    "eigendecompose_gram",
    "separable_covariance",
    "positive_rank",
    "dump_eigensystem",
]

# Relative cutoff below which an eigenvalue counts as numerically zero.
RANK_RTOL = 1e-12
# Relative gap below which neighbouring eigenvalues count as tied.
GAP_RTOL = 1e-10


@dataclass(frozen=True)
class CovarianceKernel:
    """Symmetric kernel values on the grid of ``domain``."""

    values: np.ndarray
    domain: GridDomain

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        g = self.domain.size
        if values.shape != (g, g):
            raise ValueError(f"kernel must be {g} x {g} to match the domain")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class EigenSystem:
    """Leading eigenpairs of a covariance kernel.

    ``eigenfunctions`` holds one function per column, orthonormal under the
    quadrature of ``domain``; the first coordinate of each function whose
    magnitude is non-negligible is made positive so decompositions are
    reproducible.  ``degenerate`` flags (near-)tied eigenvalues among the
    returned components, ``truncated`` flags a request that exceeded the
    numerical rank.
    """

    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    explained: np.ndarray
    domain: GridDomain
    degenerate: bool = False
    truncated: bool = False

    @property
    def n_components(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class SeparableEigenSystem:
    """Tensor-product eigenbasis built from per-axis decompositions.

    ``tensor_index[i]`` gives the per-axis component indices of the i-th
    tensor function and ``tensor_eigenvalues`` the corresponding products,
    sorted in descending order (ties broken by index order).
    """

    axes: tuple[EigenSystem, EigenSystem, EigenSystem]
    tensor_index: np.ndarray
    tensor_eigenvalues: np.ndarray

    @property
    def n_components(self) -> int:
        return self.tensor_eigenvalues.size


def empirical_covariance(x: FunctionalSample) -> CovarianceKernel:
    """Covariance kernel of the demeaned sample (divisor ``n``)."""
    centered = x.values - x.values.mean(axis=0)
    c = centered.T @ centered / x.n_obs
    return CovarianceKernel(c, x.domain)


def _fix_signs(functions: np.ndarray) -> np.ndarray:
    out = functions.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        mags = np.abs(col)
        top = mags.max()
        if top == 0.0:
            continue
        lead = np.argmax(mags > 1e-12 * top)
        if col[lead] < 0:
            out[:, j] = -col
    return out


def _degenerate(eigenvalues_desc: np.ndarray, d: int) -> bool:
    lam1 = eigenvalues_desc[0] if eigenvalues_desc.size else 0.0
    if lam1 <= 0.0:
        return True
    upto = min(d + 1, eigenvalues_desc.size)
    gaps = -np.diff(eigenvalues_desc[:upto])
    return bool(np.any(gaps < GAP_RTOL * lam1))


def eigendecompose(kernel: CovarianceKernel, d: int) -> EigenSystem:
    """Leading ``d`` eigenpairs of the kernel under its quadrature.

    The generalised eigenproblem ``integral c(u, s) v(s) ds = lam v(u)`` is
    symmetrised with the square-root weight transform before calling the
    dense symmetric solver, so the returned functions are orthonormal in
    the weighted inner product.
    """
    g = kernel.domain.size
    if not 1 <= d <= g:
        raise ValueError(f"d must be in [1, {g}], got {d}")
    w = kernel.domain.weights
    sw = np.sqrt(w)
    b = kernel.values * sw[:, None] * sw[None, :]
    b = 0.5 * (b + b.T)
    evals, evecs = np.linalg.eigh(b)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    lam = evals[:d].copy()
    funcs = _fix_signs(evecs[:, :d] / sw[:, None])
    trace = float(np.sum(w * np.diag(kernel.values)))
    explained = lam / trace if trace > 0 else np.zeros_like(lam)
    return EigenSystem(
        eigenvalues=lam,
        eigenfunctions=funcs,
        explained=explained,
        domain=kernel.domain,
        degenerate=_degenerate(evals, d),
    )


def eigendecompose_gram(x: FunctionalSample, d: int) -> EigenSystem:
    """Leading eigenpairs via the n x n Gram matrix of the observations.

    Writes each eigenfunction as a combination of demeaned observations;
    the non-zero spectrum equals the direct route's.  At most the numerical
    rank of the sample is available: a larger request is truncated and
    flagged.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    n = x.n_obs
    centered = x.values - x.values.mean(axis=0)
    a = centered * np.sqrt(x.domain.weights)
    gram = a @ a.T / n
    gram = 0.5 * (gram + gram.T)
    evals, evecs = np.linalg.eigh(gram)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    lam1 = max(evals[0], 0.0)
    rank = int(np.sum(evals > RANK_RTOL * lam1)) if lam1 > 0 else 0
    if rank == 0:
        raise ValueError("sample is numerically constant, no eigenstructure")
    truncated = d > rank
    d_eff = min(d, rank)
    lam = evals[:d_eff].copy()
    coeffs = evecs[:, :d_eff] / np.sqrt(n * lam)
    funcs = _fix_signs(centered.T @ coeffs)
    trace = float(np.trace(gram))
    explained = lam / trace if trace > 0 else np.zeros_like(lam)
    return EigenSystem(
        eigenvalues=lam,
        eigenfunctions=funcs,
        explained=explained,
        domain=x.domain,
        degenerate=_degenerate(evals, d_eff),
        truncated=truncated,
    )


def positive_rank(x: FunctionalSample) -> int:
    """Number of numerically positive covariance eigenvalues of the sample."""
    n = x.n_obs
    centered = x.values - x.values.mean(axis=0)
    a = centered * np.sqrt(x.domain.weights)
    if a.shape[1] <= n:
        gram = a.T @ a / n
    else:
        gram = a @ a.T / n
    evals = np.linalg.eigvalsh(0.5 * (gram + gram.T))
    lam1 = max(evals[-1], 0.0)
    if lam1 <= 0:
        return 0
    return int(np.sum(evals > RANK_RTOL * lam1))


def _axis_covariance(values: np.ndarray, axis: int) -> np.ndarray:
    """Average outer product of fibers along one spatial axis."""
    # Move the requested spatial axis to the end; average over everything else.
    moved = np.moveaxis(values, axis + 1, -1)
    flat = moved.reshape(-1, moved.shape[-1])
    return flat.T @ flat / flat.shape[0]


def separable_covariance(x: VolumeSeries, d_axis) -> SeparableEigenSystem:
    """Per-axis covariance eigenbases and their tensor products.

    Treats the covariance of the demeaned volumes as a product of one
    kernel per spatial axis.  ``d_axis`` is either one count shared by all
    axes or a triple.  Tensor eigenvalues are the per-axis products; the
    enumeration is sorted descending with ties broken by index order.
    """
    if np.isscalar(d_axis):
        counts = (int(d_axis),) * 3
    else:
        counts = tuple(int(c) for c in d_axis)
        if len(counts) != 3:
            raise ValueError("d_axis must be a scalar or a triple")
    dims = x.dims
    for c, size in zip(counts, dims):
        if not 1 <= c <= size:
            raise ValueError(f"axis component count {c} outside [1, {size}]")
    centered = x.values - x.values.mean(axis=0)
    systems = []
    for axis in range(3):
        cov = _axis_covariance(centered, axis)
        kernel = CovarianceKernel(cov, GridDomain.counting(dims[axis]))
        systems.append(eigendecompose(kernel, counts[axis]))
    l1, l2, l3 = np.meshgrid(
        np.arange(counts[0]), np.arange(counts[1]), np.arange(counts[2]), indexing="ij"
    )
    triples = np.column_stack([l1.ravel(), l2.ravel(), l3.ravel()]).astype(np.int64)
    products = (
        systems[0].eigenvalues[triples[:, 0]]
        * systems[1].eigenvalues[triples[:, 1]]
        * systems[2].eigenvalues[triples[:, 2]]
    )
    order = np.lexsort((triples[:, 2], triples[:, 1], triples[:, 0], -products))
    return SeparableEigenSystem(
        axes=tuple(systems),
        tensor_index=triples[order],
        tensor_eigenvalues=products[order],
    )


def dump_eigensystem(system: EigenSystem, prefix) -> tuple[str, str]:
    """Write eigenvalues as CSV and eigenfunctions as raw float64.

    Produces ``{prefix}_eigenvalues.csv`` with columns
    ``component,eigenvalue,explained`` and ``{prefix}_eigenfunctions.bin``
    holding the G x d function matrix little-endian row-major.  Returns the
    two paths.
    """
    csv_path = f"{prefix}_eigenvalues.csv"
    bin_path = f"{prefix}_eigenfunctions.bin"
    rows = np.column_stack(
        [np.arange(system.n_components), system.eigenvalues, system.explained]
    )
    np.savetxt(
        csv_path,
        rows,
        delimiter=",",
        header="component,eigenvalue,explained",
        comments="",
        fmt=["%d", "%.17g", "%.17g"],
    )
    with open(bin_path, "wb") as fh:
        fh.write(np.ascontiguousarray(system.eigenfunctions, dtype="<f8").tobytes())
    return csv_path, bin_path
