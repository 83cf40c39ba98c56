import numpy as np
import pytest

from fcov import (
    ScoreMatrix,
    block_longrun_variance,
    correct_residuals,
    default_block_length,
    estimate_component_changepoint,
    estimate_component_episode,
    gaussian_sigma_diag,
    vech_products,
)
from oracles import component_changepoint_brute, vech_pairs_brute


def test_default_block_length_is_cube_root():
    assert default_block_length(200) == 6
    assert default_block_length(1000) == 10
    assert default_block_length(1) == 1
    assert default_block_length(27) == 3


def test_vech_products_order_and_values(rng):
    s = rng.standard_normal((9, 4))
    prod = vech_products(ScoreMatrix(s))
    assert prod.n_components == 10
    expected_pairs = vech_pairs_brute(4)
    np.testing.assert_array_equal(prod.pair_index, expected_pairs)
    for i, (l1, l2) in enumerate(expected_pairs):
        np.testing.assert_array_equal(prod.values[:, i], s[:, l1] * s[:, l2])


def test_component_changepoint_matches_brute_force(rng):
    for _ in range(10):
        q = rng.standard_normal(rng.integers(5, 60))
        assert estimate_component_changepoint(q) == component_changepoint_brute(q)


def test_component_changepoint_finds_a_clean_mean_shift(rng):
    q = np.concatenate([rng.standard_normal(70), rng.standard_normal(50) + 6.0])
    assert abs(estimate_component_changepoint(q) - 70) <= 2


def test_component_episode_finds_a_bump(rng):
    q = rng.standard_normal(150)
    q[60:100] += 7.0
    k1, k2 = estimate_component_episode(q)
    assert abs(k1 - 60) <= 2
    assert abs(k2 - 100) <= 2
    assert k1 < k2 <= 149


def test_component_episode_brute_force_agreement(rng):
    # check against a direct scan over all pairs of the centered partial sums
    for _ in range(5):
        q = rng.standard_normal(40)
        n = q.size
        c = np.cumsum(q) - np.arange(1, n + 1) * q.sum() / n
        best = -np.inf
        best_pair = None
        for a in range(n - 1):
            for b in range(a + 1, n - 1):
                val = abs(c[b] - c[a])
                if val > best:
                    best = val
                    best_pair = (a + 1, b + 1)
        assert estimate_component_episode(q) == best_pair


def test_correct_residuals_zero_segment_means(rng):
    q = rng.standard_normal((80, 3))
    q[50:, 1] += 4.0
    res = correct_residuals(q, "amoc")
    assert res.changepoints.shape == (3,)
    for i in range(3):
        k = res.changepoints[i]
        assert res.values[:k, i].mean() == pytest.approx(0.0, abs=1e-12)
        assert res.values[k:, i].mean() == pytest.approx(0.0, abs=1e-12)


def test_correct_residuals_epidemic_three_segments(rng):
    q = rng.standard_normal((90, 2))
    q[30:60, 0] += 5.0
    res = correct_residuals(q, "epidemic")
    assert res.changepoints.shape == (2, 2)
    k1, k2 = res.changepoints[0]
    assert 25 <= k1 <= 35
    assert 55 <= k2 <= 65
    for lo, hi in ((0, k1), (k1, k2), (k2, 90)):
        assert res.values[lo:hi, 0].mean() == pytest.approx(0.0, abs=1e-12)


def test_correct_residuals_rejects_unknown_alternative(rng):
    with pytest.raises(ValueError, match="alternative"):
        correct_residuals(rng.standard_normal(20), "drift")


def test_block_longrun_variance_formula(rng):
    r = rng.standard_normal((20, 2))
    diag = block_longrun_variance(r, 4)
    sums = r.reshape(5, 4, 2).sum(axis=1)
    np.testing.assert_allclose(diag.variances, (sums**2).sum(axis=0) / 20, rtol=1e-14)
    assert diag.block_length == 4


def test_block_longrun_variance_ignores_tail(rng):
    r = rng.standard_normal((22, 1))
    diag = block_longrun_variance(r, 4)
    ref = block_longrun_variance(r[:20], 4)
    # same block sums, but the divisor keeps the full length
    np.testing.assert_allclose(diag.variances * 22, ref.variances * 20, rtol=1e-14)
    with pytest.raises(ValueError):
        block_longrun_variance(r, 0)
    with pytest.raises(ValueError):
        block_longrun_variance(r, 23)


def test_block_variance_consistent_for_iid_noise(rng):
    r = rng.standard_normal((100_000, 1))
    diag = block_longrun_variance(r - r.mean(), 10)
    assert diag.variances[0] == pytest.approx(1.0, rel=0.05)


def test_gaussian_sigma_diag_values():
    diag = gaussian_sigma_diag(np.array([4.0, 1.0]))
    np.testing.assert_allclose(diag.variances, [32.0, 4.0, 2.0])
    assert diag.block_length == 0


def test_gaussian_sigma_diag_matches_product_variances(rng):
    lam = np.array([2.5, 1.0, 0.5])
    scores = rng.standard_normal((400_000, 3)) * np.sqrt(lam)
    prod = vech_products(ScoreMatrix(scores))
    emp = prod.values.var(axis=0)
    np.testing.assert_allclose(emp, gaussian_sigma_diag(lam).variances, rtol=0.03)
