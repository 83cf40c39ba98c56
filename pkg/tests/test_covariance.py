import numpy as np
import pytest

from fcov import (
    FunctionalSample,
    GridDomain,
    VolumeSeries,
    compute_scores,
    dump_eigensystem,
    eigendecompose,
    eigendecompose_gram,
    empirical_covariance,
    fourier_basis,
    inner_product,
    positive_rank,
    read_csv_matrix,
    separable_covariance,
)
from conftest import make_basis_sample
from oracles import jacobi_eigh, spectrum_by_svd


def test_empirical_covariance_matches_direct_formula(rng):
    dom = GridDomain.uniform(15)
    x = FunctionalSample(rng.standard_normal((20, 15)), dom)
    c = empirical_covariance(x)
    centered = x.values - x.values.mean(axis=0)
    np.testing.assert_allclose(c.values, centered.T @ centered / 20, atol=1e-14)
    np.testing.assert_allclose(c.values, c.values.T, atol=0)


def test_eigendecompose_agrees_with_jacobi_oracle(rng):
    dom = GridDomain.uniform(18)
    x = FunctionalSample(rng.standard_normal((40, 18)), dom)
    kernel = empirical_covariance(x)
    sys = eigendecompose(kernel, 6)
    # the discretised operator is C diag(w); symmetrise with sqrt weights
    half = np.sqrt(dom.weights)
    sym = half[:, None] * kernel.values * half[None, :]
    w_oracle, _ = jacobi_eigh(sym)
    np.testing.assert_allclose(sys.eigenvalues, w_oracle[:6], rtol=1e-10)


def test_eigenfunctions_orthonormal_under_quadrature(rng):
    dom = GridDomain.uniform(30)
    x = FunctionalSample(rng.standard_normal((25, 30)), dom)
    sys = eigendecompose(empirical_covariance(x), 5)
    gram = inner_product(
        sys.eigenfunctions.T[:, None, :], sys.eigenfunctions.T[None, :, :], dom
    )
    np.testing.assert_allclose(gram, np.eye(5), atol=1e-10)


def test_sign_convention_is_reproducible(rng):
    dom = GridDomain.uniform(12)
    x = FunctionalSample(rng.standard_normal((30, 12)), dom)
    sys = eigendecompose(empirical_covariance(x), 4)
    for j in range(4):
        col = sys.eigenfunctions[:, j]
        lead = col[np.abs(col) > 1e-8 * np.abs(col).max()][0]
        assert lead > 0


def test_gram_route_matches_kernel_route(rng):
    x, _ = make_basis_sample(rng, n=35, rank=5, grid=61)
    direct = eigendecompose(empirical_covariance(x), 5)
    gram = eigendecompose_gram(x, 5)
    np.testing.assert_allclose(gram.eigenvalues, direct.eigenvalues, rtol=1e-9)
    for j in range(5):
        a = direct.eigenfunctions[:, j]
        b = gram.eigenfunctions[:, j]
        assert np.abs(inner_product(a, b, x.domain)) == pytest.approx(1.0, abs=1e-8)


def test_gram_spectrum_matches_svd_oracle(rng):
    x, _ = make_basis_sample(rng, n=30, rank=6, grid=201)
    sys = eigendecompose_gram(x, 6)
    oracle = spectrum_by_svd(x.values, x.domain.weights)
    np.testing.assert_allclose(sys.eigenvalues, oracle[:6], rtol=1e-9)


def test_explained_fractions_sum_below_one(rng):
    x, _ = make_basis_sample(rng, n=40, rank=5, grid=61)
    sys = eigendecompose_gram(x, 3)
    assert np.all(np.diff(sys.explained) <= 1e-15)
    assert 0 < sys.explained.sum() <= 1 + 1e-12


def test_truncation_to_numerical_rank(rng):
    x, _ = make_basis_sample(rng, n=50, rank=3, grid=41)
    sys = eigendecompose_gram(x, 10)
    assert sys.truncated
    assert sys.n_components == 3
    assert positive_rank(x) == 3


def test_degenerate_flag_on_tied_spectrum():
    from fcov import CovarianceKernel

    dom = GridDomain.uniform(64)
    basis = fourier_basis(3, dom.points)
    # exactly equal weight on the sine and cosine pair ties the eigenvalue
    kernel_vals = basis[:, 1:3] @ basis[:, 1:3].T
    sys = eigendecompose(CovarianceKernel(kernel_vals, dom), 2)
    assert sys.degenerate
    assert sys.eigenvalues[0] == pytest.approx(sys.eigenvalues[1], rel=1e-8)


def test_scores_recover_generating_coefficients(rng):
    x, coef = make_basis_sample(rng, n=2000, rank=3, grid=121, sigmas=[4.0, 2.0, 1.0])
    sys = eigendecompose_gram(x, 3)
    scores = compute_scores(x, sys)
    centered = coef - coef.mean(axis=0)
    for j, sigma in enumerate([4.0, 2.0, 1.0]):
        got = scores.values[:, j]
        ref = centered[:, j]
        sign = np.sign(got @ ref)
        rms = np.sqrt(np.mean((sign * got - ref) ** 2))
        assert rms < 0.1 * sigma


def test_separable_covariance_recovers_tensor_products(rng):
    nx, ny, nz = 5, 4, 3
    gx = rng.standard_normal((nx, nx))
    fx = np.linalg.qr(gx)[0]
    fy = np.linalg.qr(rng.standard_normal((ny, ny)))[0]
    fz = np.linalg.qr(rng.standard_normal((nz, nz)))[0]
    lx = np.array([4.0, 1.0, 0.25, 0.05, 0.01])
    ly = np.array([3.0, 0.9, 0.2, 0.04])
    lz = np.array([2.0, 0.5, 0.1])
    n = 4000
    coef = rng.standard_normal((n, nx, ny, nz))
    coef *= np.sqrt(lx)[:, None, None] * np.sqrt(ly)[None, :, None] * np.sqrt(lz)[None, None, :]
    vals = np.einsum("tabc,xa,yb,zc->txyz", coef, fx, fy, fz)
    vol = VolumeSeries(vals)
    sep = separable_covariance(vol, d_axis=2)
    assert sep.n_components == 8
    lead = sorted(
        (a * b * c for a in lx[:2] for b in ly[:2] for c in lz[:2]), reverse=True
    )
    np.testing.assert_allclose(sep.tensor_eigenvalues, lead, rtol=0.2)
    assert np.all(np.diff(sep.tensor_eigenvalues) <= 1e-12)
    scores = compute_scores(vol, sep)
    assert scores.values.shape == (n, 8)


def test_separable_axis_request_can_differ_per_axis(rng):
    vol = VolumeSeries(rng.standard_normal((50, 4, 3, 3)))
    sep = separable_covariance(vol, d_axis=(2, 1, 3))
    assert sep.tensor_index.shape == (6, 3)
    assert sep.axes[0].n_components == 2
    assert sep.axes[1].n_components == 1
    assert sep.axes[2].n_components == 3


def test_dump_eigensystem_round_trips(tmp_path, rng):
    x, _ = make_basis_sample(rng, n=30, rank=3, grid=41)
    sys = eigendecompose_gram(x, 3)
    val_path, fun_path = dump_eigensystem(sys, tmp_path / "eig")
    vals = read_csv_matrix(val_path)
    np.testing.assert_array_equal(vals[:, 0], np.arange(3))
    np.testing.assert_allclose(vals[:, 1], sys.eigenvalues, rtol=1e-15)
    np.testing.assert_allclose(vals[:, 2], sys.explained, rtol=1e-15)
    raw = np.fromfile(fun_path, dtype="<f8").reshape(sys.eigenfunctions.shape)
    np.testing.assert_array_equal(raw, sys.eigenfunctions)
