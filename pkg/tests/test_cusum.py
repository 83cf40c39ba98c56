import numpy as np
import pytest

from fcov import (
    ScoreMatrix,
    block_longrun_variance,
    correct_residuals,
    default_block_length,
    functional_norm_oracle,
    functional_weights,
    lambda_max,
    lambda_max_epidemic,
    omega_amoc,
    omega_epidemic,
    omega_functional,
    partial_sums,
    preselect_pairs,
    vech_products,
)
from conftest import make_basis_sample
from oracles import (
    amoc_profile_brute,
    epidemic_sum_brute,
    episode_max_brute,
)


def _sums_and_weights(rng, n=60, d=3):
    q = rng.standard_normal((n, d))
    s = partial_sums(q)
    w = 1.0 / rng.uniform(0.5, 2.0, d)
    return s, w


def test_partial_sums_definition(rng):
    q = rng.standard_normal((25, 2))
    s = partial_sums(q)
    n = 25
    for k in (1, 7, 25):
        ref = (q[:k].sum(axis=0) - k / n * q.sum(axis=0)) / np.sqrt(n)
        np.testing.assert_allclose(s[k - 1], ref, atol=1e-12)
    np.testing.assert_allclose(s[-1], 0.0, atol=1e-12)


def test_partial_sums_accepts_1d_and_product_series(rng):
    q = rng.standard_normal(30)
    assert partial_sums(q).shape == (30, 1)
    prod = vech_products(ScoreMatrix(rng.standard_normal((30, 2))))
    assert partial_sums(prod).shape == (30, 3)


def test_omega_amoc_matches_brute_profile(rng):
    s, w = _sums_and_weights(rng)
    stat = omega_amoc(s, 1.0 / w)
    profile = amoc_profile_brute(s, w)
    assert stat.value == pytest.approx(profile.mean(), rel=1e-12)
    assert stat.changepoint == int(np.argmax(profile[:-1])) + 1
    assert stat.n_components == 3


def test_omega_amoc_full_matrix_equals_diagonal_when_diagonal(rng):
    s, w = _sums_and_weights(rng)
    var = 1.0 / w
    diag_stat = omega_amoc(s, var)
    full_stat = omega_amoc(s, np.diag(var))
    assert full_stat.value == pytest.approx(diag_stat.value, rel=1e-12)
    assert full_stat.changepoint == diag_stat.changepoint


def test_omega_amoc_drops_degenerate_components(rng):
    s, _ = _sums_and_weights(rng)
    var = np.array([1.0, 0.0, 2.0])
    stat = omega_amoc(s, var)
    assert stat.n_components == 2
    ref = omega_amoc(s[:, [0, 2]], var[[0, 2]])
    assert stat.value == pytest.approx(ref.value, rel=1e-12)
    with pytest.raises(ValueError, match="degenerate"):
        omega_amoc(s, np.zeros(3))


def test_omega_epidemic_fast_formula_matches_double_sum(rng):
    for _ in range(6):
        n = int(rng.integers(10, 50))
        d = int(rng.integers(1, 4))
        q = rng.standard_normal((n, d))
        s = partial_sums(q)
        w = 1.0 / rng.uniform(0.25, 4.0, d)
        stat = omega_epidemic(s, 1.0 / w)
        assert stat.value == pytest.approx(epidemic_sum_brute(s, w), rel=1e-11)


def test_omega_epidemic_pair_matches_restricted_brute(rng):
    q = rng.standard_normal((40, 2))
    q[12:30] += 2.5
    s = partial_sums(q)
    var = np.ones(2)
    stat = omega_epidemic(s, var)
    _, pair = episode_max_brute(s, 1.0 / var)
    assert stat.changepoint == pair


def test_lambda_max_is_profile_maximum(rng):
    s, w = _sums_and_weights(rng)
    stat = lambda_max(s, 1.0 / w)
    profile = amoc_profile_brute(s, w)
    assert stat.value == pytest.approx(profile.max(), rel=1e-12)
    assert stat.kind == "multivariate-max"


def test_lambda_max_epidemic_matches_brute(rng):
    for _ in range(4):
        q = rng.standard_normal((30, 2))
        s = partial_sums(q)
        var = rng.uniform(0.5, 2.0, 2)
        stat = lambda_max_epidemic(s, var)
        best, pair = episode_max_brute(s, 1.0 / var)
        assert stat.value == pytest.approx(best, rel=1e-11)
        assert stat.changepoint == pair


def test_epidemic_full_matrix_whitening_consistent(rng):
    q = rng.standard_normal((35, 2))
    s = partial_sums(q)
    cov = np.array([[2.0, 0.6], [0.6, 1.0]])
    full = omega_epidemic(s, cov)
    # whiten by hand and reuse the identity-weight path
    chol = np.linalg.cholesky(cov)
    sw = np.linalg.solve(chol, s.T).T
    ref = omega_epidemic(sw, np.ones(2))
    assert full.value == pytest.approx(ref.value, rel=1e-10)
    assert full.changepoint == ref.changepoint


def test_preselection_keeps_reference_pair_and_sorts(rng):
    scores = ScoreMatrix(rng.standard_normal((120, 5)) * np.array([2.0, 1.5, 1.0, 0.7, 0.4]))
    sel = preselect_pairs(scores, eps1=0.0, eps2=0.0)
    assert sel.n_pairs == 15
    assert [0, 0] in sel.pairs.tolist()
    assert np.all(np.diff(sel.predicted_ratio) <= 1e-12)
    assert sel.predicted_ratio[0] == pytest.approx(1.0)
    assert sel.s11_sq > 0
    assert sel.gamma_sq.shape == (15,)


def test_preselection_thresholds_shrink_the_pair_set(rng):
    scores = ScoreMatrix(
        rng.standard_normal((150, 6)) * np.array([1.0, 0.5, 0.25, 0.1, 0.05, 0.02])
    )
    loose = preselect_pairs(scores, eps1=0.0, eps2=0.0)
    tight = preselect_pairs(scores, eps1=5e-3, eps2=2.5e-2)
    assert tight.n_pairs < loose.n_pairs
    kept = {tuple(p) for p in tight.pairs.tolist()}
    assert kept <= {tuple(p) for p in loose.pairs.tolist()}
    assert tight.n_candidates <= loose.n_candidates


def test_preselection_stage_one_ratio_formula(rng):
    scores = ScoreMatrix(rng.standard_normal((100, 3)))
    sel = preselect_pairs(scores, eps1=0.0, eps2=0.0)
    resid = correct_residuals(scores.values, "amoc")
    sd = np.sqrt((resid.values**2).sum(axis=0) / 99)
    for (l1, l2), ratio in zip(sel.pairs.tolist(), sel.predicted_ratio):
        if l1 == l2:
            assert ratio == pytest.approx(sd[l1] ** 2 / sd[0] ** 2, rel=1e-12)
        else:
            assert ratio == pytest.approx(sd[l1] * sd[l2] / (2 * sd[0] ** 2), rel=1e-12)


def test_preselection_validates_thresholds(rng):
    scores = ScoreMatrix(rng.standard_normal((50, 2)))
    with pytest.raises(ValueError):
        preselect_pairs(scores, eps1=-0.1)
    with pytest.raises(ValueError):
        preselect_pairs(scores, eps1=1.5)
    with pytest.raises(ValueError):
        preselect_pairs(scores, eps2=-1.0)


def test_unweighted_functional_with_all_pairs_matches_vech_sum(rng):
    # with every pair retained, the statistic is the plain sum of squared
    # partial sums over the half-vectorised products
    scores = ScoreMatrix(rng.standard_normal((80, 4)))
    sel = preselect_pairs(scores, eps1=0.0, eps2=0.0)
    stat = omega_functional(scores, sel, weighted=False)
    s = partial_sums(vech_products(scores))
    assert stat.value == pytest.approx(float((s**2).sum(axis=1).mean()), rel=1e-10)
    assert stat.n_components == 10


def test_functional_norm_identity_on_exact_rank_data(rng):
    # the integrated squared bivariate partial sum equals twice the pair sum
    # minus the diagonal-pair sum when the scores span the sample
    from fcov import compute_scores, demean, eigendecompose_gram

    for _ in range(10):
        d = int(rng.integers(1, 5))
        x, _ = make_basis_sample(rng, n=40, rank=d, grid=96)
        scores = compute_scores(x, eigendecompose_gram(x, d))
        prods = vech_products(scores)
        s = partial_sums(prods)
        diag_cols = [i for i, (a, b) in enumerate(prods.pair_index.tolist()) if a == b]
        for k in (1, 10, 25, 40):
            t_k = float((s[k - 1] ** 2).sum())
            diag_k = float((s[k - 1, diag_cols] ** 2).sum())
            oracle = functional_norm_oracle(demean(x), k)
            assert oracle == pytest.approx(2 * t_k - diag_k, rel=1e-8)


def test_weighted_functional_uses_fixed_reference_scale(rng):
    scores = ScoreMatrix(rng.standard_normal((100, 3)))
    sel = preselect_pairs(scores, eps1=0.0, eps2=0.0)
    stat = omega_functional(scores, sel, weighted=True)
    prods = scores.values[:, sel.pairs[:, 0]] * scores.values[:, sel.pairs[:, 1]]
    w = functional_weights(prods, sel.s11_sq, default_block_length(100))
    s = partial_sums(prods)
    assert stat.value == pytest.approx(float(((s**2) @ w).mean()), rel=1e-12)
    # weights shrink when the reference variance grows
    w_big = functional_weights(prods, 10 * sel.s11_sq, default_block_length(100))
    assert np.all(w_big < w)


def test_functional_statistic_scale_invariance(rng):
    base = rng.standard_normal((90, 4)) * np.array([1.5, 1.0, 0.6, 0.3])
    for c in (1e-3, 1.0, 1e3):
        scores = ScoreMatrix(base * c)
        sel = preselect_pairs(scores)
        got = omega_functional(scores, sel, weighted=True)
        ref = omega_functional(ScoreMatrix(base), preselect_pairs(ScoreMatrix(base)), weighted=True)
        assert got.value == pytest.approx(ref.value, rel=1e-10)
        assert got.changepoint == ref.changepoint


def test_multivariate_statistic_scale_invariance(rng):
    base = rng.standard_normal((70, 3))
    q0 = vech_products(ScoreMatrix(base))
    res0 = correct_residuals(q0, "amoc")
    d0 = block_longrun_variance(res0, default_block_length(70))
    ref = omega_amoc(partial_sums(q0), d0)
    for c in (1e-3, 1e3):
        q = vech_products(ScoreMatrix(base * c))
        res = correct_residuals(q, "amoc")
        d = block_longrun_variance(res, default_block_length(70))
        got = omega_amoc(partial_sums(q), d)
        assert got.value == pytest.approx(ref.value, rel=1e-10)


def test_empty_selection_is_rejected(rng):
    scores = ScoreMatrix(rng.standard_normal((60, 2)))
    sel = preselect_pairs(scores, eps1=0.0, eps2=0.0)
    empty = type(sel)(
        pairs=np.zeros((0, 2), dtype=np.int64),
        predicted_ratio=np.zeros(0),
        refined_ratio=np.zeros(0),
        s11_sq=sel.s11_sq,
        eps1=0.0,
        eps2=0.0,
        n_candidates=0,
        n_scores=2,
        gamma_sq=np.zeros(0),
    )
    with pytest.raises(ValueError, match="retained"):
        omega_functional(scores, empty)


def test_functional_epidemic_value_matches_component_identity(rng):
    scores = ScoreMatrix(rng.standard_normal((70, 3)))
    sel = preselect_pairs(scores, eps1=0.0, eps2=0.0)
    stat = omega_functional(scores, sel, weighted=False, alternative="epidemic")
    prods = scores.values[:, sel.pairs[:, 0]] * scores.values[:, sel.pairs[:, 1]]
    s = partial_sums(prods)
    assert stat.value == pytest.approx(epidemic_sum_brute(s, np.ones(s.shape[1])), rel=1e-10)
    k1, k2 = stat.changepoint
    assert 1 <= k1 < k2 <= 69
