"""CUSUM-type test statistics on score product series.

All statistics are built from the scaled centered partial sums

    S_k = n**-0.5 * (sum_{t<=k} q_t - (k/n) * sum_t q_t),   k = 1..n,

of a product series ``q``.  The quadratic forms come in a summed and a
maximum flavour, each for a single change (one shift in the mean of the
products) and for an episode (shift followed by reversion).  The episode
sum over all ordered pairs ``k1 < k2`` collapses per component to
``n * sum_k S_k**2 - (sum_k S_k)**2``, which keeps it linear in ``n``.

Functional variants aggregate the same per-pair partial sums over an
adaptively chosen set of score pairs, either unweighted or weighted by
``1 / (s11 + gamma_p)`` with ``s11`` the variance of the first squared
score and ``gamma_p`` the block long-run variance of pair ``p``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FunctionalSample
from .scores import (
    LongRunDiag,
    ScoreMatrix,
    ScoreProductSeries,
    block_longrun_variance,
    correct_residuals,
    default_block_length,
)

__all__ = [
    "StatisticValue",
    "PreselectionResult",
    "partial_sums",
    "omega_amoc",
    "omega_epidemic",
    "lambda_max",
    "lambda_max_epidemic",
    "preselect_pairs",
    "omega_functional",
    "functional_norm_oracle",
]


@dataclass(frozen=True)
class StatisticValue:
    """A computed test statistic.

    ``changepoint`` is the 1-based argmax location: a single index for the
    one-change statistics, a pair ``(k1, k2)`` for episode statistics.
    ``n_components`` counts the product components that entered with a
    positive weight.
    """

    value: float
    kind: str
    alternative: str
    changepoint: object
    n_components: int


@dataclass(frozen=True)
class PreselectionResult:
    """Outcome of the two-stage score-pair screening.

    ``pairs`` holds the retained 0-based ``(l1, l2)`` pairs sorted by
    descending predicted ratio; ``predicted_ratio`` and ``refined_ratio``
    align with it.  ``s11_sq`` is the change-corrected variance of the
    first squared score, the reference all ratios divide by.
    """

    pairs: np.ndarray
    predicted_ratio: np.ndarray
    refined_ratio: np.ndarray
    s11_sq: float
    eps1: float
    eps2: float
    n_candidates: int
    n_scores: int
    gamma_sq: np.ndarray = None

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)


def partial_sums(q) -> np.ndarray:
    """Scaled centered partial sums, one row per ``k = 1..n``."""
    values = q.values if isinstance(q, ScoreProductSeries) else np.asarray(q, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    n = values.shape[0]
    cs = np.cumsum(values, axis=0)
    frac = np.arange(1, n + 1, dtype=np.float64)[:, None] / n
    return (cs - frac * cs[-1]) / np.sqrt(n)


def _diag_weights(d_est, n_comp: int) -> np.ndarray:
    """Inverse variances with non-positive entries excluded (weight zero)."""
    if isinstance(d_est, LongRunDiag):
        var = d_est.variances
    else:
        var = np.asarray(d_est, dtype=np.float64)
    var = var.reshape(-1)
    if var.size != n_comp:
        raise ValueError(f"expected {n_comp} variances, got {var.size}")
    w = np.zeros_like(var)
    good = var > 0
    if not np.any(good):
        raise ValueError("all components degenerate (non-positive long-run variance)")
    w[good] = 1.0 / var[good]
    return w


def _as_full_matrix(d_est) -> np.ndarray | None:
    if isinstance(d_est, np.ndarray) and d_est.ndim == 2:
        return d_est
    return None


def _quad_profile(s: np.ndarray, d_est) -> tuple[np.ndarray, int]:
    """Per-k quadratic form ``S_k' D^{-1} S_k`` and the component count."""
    full = _as_full_matrix(d_est)
    if full is not None:
        if full.shape != (s.shape[1], s.shape[1]):
            raise ValueError("covariance matrix does not match the component count")
        try:
            solved = np.linalg.solve(full, s.T)
        except np.linalg.LinAlgError as err:
            raise ValueError("singular long-run covariance") from err
        return np.einsum("ki,ik->k", s, solved), s.shape[1]
    w = _diag_weights(d_est, s.shape[1])
    return (s**2) @ w, int(np.count_nonzero(w))


def _amoc_changepoint(profile: np.ndarray) -> int:
    n = profile.shape[0]
    return int(np.argmax(profile[: n - 1])) + 1


def omega_amoc(s: np.ndarray, d_est) -> StatisticValue:
    """Summed quadratic-form statistic for a single covariance change.

    Parameters
    ----------
    s : ndarray, shape (n, d)
        Partial sum process from :func:`partial_sums`.
    d_est : LongRunDiag, 1-d array, or 2-d array
        Long-run variance diagonal (weights are its inverse, non-positive
        entries drop the component) or a full covariance matrix.
    """
    profile, used = _quad_profile(s, d_est)
    return StatisticValue(
        value=float(profile.mean()),
        kind="multivariate-sum",
        alternative="amoc",
        changepoint=_amoc_changepoint(profile),
        n_components=used,
    )


def _episode_scan(s: np.ndarray, w: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Max of the pair form over the full pair set, argmax over k2 <= n-1.

    Returns the maximum of ``sum_i w_i (S_{k2,i} - S_{k1,i})**2`` over
    ``1 <= k1 < k2 <= n`` together with the maximising pair restricted to
    ``k2 <= n-1`` so that the post-episode segment is non-empty.
    """
    n = s.shape[0]
    sw = s * np.sqrt(w)
    best = -np.inf
    best_restricted = -np.inf
    pair = (1, 2)
    for a in range(n - 1):
        diffs = sw[a + 1 :] - sw[a]
        vals = np.einsum("ij,ij->i", diffs, diffs)
        top = int(np.argmax(vals))
        if vals[top] > best:
            best = float(vals[top])
        limit = vals[: n - 2 - a]
        if limit.size:
            t2 = int(np.argmax(limit))
            if limit[t2] > best_restricted:
                best_restricted = float(limit[t2])
                pair = (a + 1, a + 2 + t2)
    return best, pair


def _episode_heuristic(s: np.ndarray, w: np.ndarray) -> tuple[int, int]:
    """O(n) episode location: the dominant component's best pair."""
    n, d = s.shape
    best_val = -np.inf
    best_pair = (1, 2)
    for i in range(d):
        if w[i] == 0:
            continue
        col = s[: n - 1, i]
        run_min, run_min_idx = col[0], 0
        run_max, run_max_idx = col[0], 0
        up, up_pair = -np.inf, (1, 2)
        dn, dn_pair = -np.inf, (1, 2)
        for b in range(1, n - 1):
            if col[b] - run_min > up:
                up = col[b] - run_min
                up_pair = (run_min_idx + 1, b + 1)
            if run_max - col[b] > dn:
                dn = run_max - col[b]
                dn_pair = (run_max_idx + 1, b + 1)
            if col[b] < run_min:
                run_min, run_min_idx = col[b], b
            if col[b] > run_max:
                run_max, run_max_idx = col[b], b
        val, pair = (up, up_pair) if up >= dn else (dn, dn_pair)
        score = w[i] * val * val
        if score > best_val:
            best_val = score
            best_pair = pair
    return best_pair


def omega_epidemic(s: np.ndarray, d_est) -> StatisticValue:
    """Summed pair statistic for an episode of changed covariance.

    The sum over all ``k1 < k2`` uses the per-component identity
    ``n * sum_k S_k**2 - (sum_k S_k)**2``.  The reported location pair is
    a full scan for ``n <= 1000`` and the dominant-component heuristic
    above that.
    """
    n = s.shape[0]
    full = _as_full_matrix(d_est)
    if full is not None:
        profile, used = _quad_profile(s, full)
        total = s.sum(axis=0)
        try:
            cross = float(total @ np.linalg.solve(full, total))
        except np.linalg.LinAlgError as err:
            raise ValueError("singular long-run covariance") from err
        value = (n * profile.sum() - cross) / n
        w = np.ones(s.shape[1])
    else:
        w = _diag_weights(d_est, s.shape[1])
        used = int(np.count_nonzero(w))
        per_comp = n * (s**2).sum(axis=0) - s.sum(axis=0) ** 2
        value = float((w * per_comp).sum() / n)
    if n <= 1000:
        if full is not None:
            # Whiten once so the scan reduces to the diagonal case.
            chol = np.linalg.cholesky(full)
            sw = np.linalg.solve(chol, s.T).T
            _, pair = _episode_scan(sw, np.ones(s.shape[1]))
        else:
            _, pair = _episode_scan(s, w)
    else:
        pair = _episode_heuristic(s, w)
    return StatisticValue(
        value=float(value),
        kind="multivariate-sum",
        alternative="epidemic",
        changepoint=pair,
        n_components=used,
    )


def lambda_max(s: np.ndarray, d_est) -> StatisticValue:
    """Maximum quadratic-form statistic for a single change."""
    profile, used = _quad_profile(s, d_est)
    return StatisticValue(
        value=float(profile.max()),
        kind="multivariate-max",
        alternative="amoc",
        changepoint=_amoc_changepoint(profile),
        n_components=used,
    )


def lambda_max_epidemic(s: np.ndarray, d_est) -> StatisticValue:
    """Maximum pair statistic for an episode; quadratic scan in ``n``."""
    full = _as_full_matrix(d_est)
    if full is not None:
        chol = np.linalg.cholesky(full)
        sw = np.linalg.solve(chol, s.T).T
        w = np.ones(s.shape[1])
        used = s.shape[1]
        value, pair = _episode_scan(sw, w)
    else:
        w = _diag_weights(d_est, s.shape[1])
        used = int(np.count_nonzero(w))
        value, pair = _episode_scan(s, w)
    return StatisticValue(
        value=float(value),
        kind="multivariate-max",
        alternative="epidemic",
        changepoint=pair,
        n_components=used,
    )


def preselect_pairs(
    scores: ScoreMatrix,
    eps1: float = 5e-4,
    eps2: float = 2.5e-3,
    block_length: int | None = None,
    alternative: str = "amoc",
) -> PreselectionResult:
    """Two-stage screening of score pairs by relative product variance.

    Stage one predicts the variance ratio of pair ``(l1, l2)`` against the
    first squared score from single-score standard deviations ``s_l``
    (change-corrected): ``s_l1 * s_l2 / (2 * s_1**2)`` off the diagonal and
    ``s_l1**2 / s_1**2`` on it; pairs below ``eps1`` are dropped.  Stage
    two recomputes the ratio nonparametrically from the change-corrected
    product residual variances and drops pairs below ``eps2``.  Both
    thresholds at zero keep every pair.  Block long-run variances of the
    retained pairs are attached as ``gamma_sq`` for inspection; statistic
    functions recompute them at their own block length.
    """
    if not 0.0 <= eps1 <= 1.0:
        raise ValueError("eps1 must be in [0, 1] (the reference pair has ratio 1)")
    if eps2 < 0.0:
        raise ValueError("eps2 must be non-negative")
    s = scores.values
    n, d = s.shape
    if n < 2:
        raise ValueError("need at least two observations")
    resid = correct_residuals(s, alternative)
    sd = np.sqrt((resid.values**2).sum(axis=0) / (n - 1))
    if sd[0] == 0.0:
        raise ValueError("leading score has zero corrected variance")
    i1, i2 = np.triu_indices(d)
    rhat = np.where(
        i1 == i2, sd[i1] ** 2 / sd[0] ** 2, sd[i1] * sd[i2] / (2.0 * sd[0] ** 2)
    )
    keep = rhat >= eps1
    i1, i2, rhat = i1[keep], i2[keep], rhat[keep]
    order = np.lexsort((i2, i1, -rhat))
    i1, i2, rhat = i1[order], i2[order], rhat[order]
    n_candidates = rhat.size

    products = s[:, i1] * s[:, i2]
    prod_resid = correct_residuals(products, alternative)
    var = (prod_resid.values**2).sum(axis=0) / (n - 1)
    ref = np.nonzero((i1 == 0) & (i2 == 0))[0]
    if ref.size == 0:
        raise ValueError("reference pair (1, 1) was screened out")
    s11_sq = float(var[ref[0]])
    if s11_sq == 0.0:
        raise ValueError("first squared score has zero corrected variance")
    refined = var / s11_sq
    keep2 = refined >= eps2
    pairs = np.column_stack([i1[keep2], i2[keep2]]).astype(np.int64)
    kb = block_length if block_length is not None else default_block_length(n)
    gamma_sq = block_longrun_variance(prod_resid.values[:, keep2], kb).variances
    return PreselectionResult(
        pairs=pairs,
        predicted_ratio=rhat[keep2],
        refined_ratio=refined[keep2],
        s11_sq=s11_sq,
        eps1=float(eps1),
        eps2=float(eps2),
        n_candidates=int(n_candidates),
        n_scores=d,
        gamma_sq=gamma_sq,
    )


def functional_weights(
    products: np.ndarray,
    s11_sq: float,
    block_length: int,
    alternative: str = "amoc",
) -> np.ndarray:
    """Weights ``1 / (s11 + gamma_p)`` for the weighted functional statistic."""
    resid = correct_residuals(products, alternative)
    gamma = block_longrun_variance(resid.values, block_length).variances
    return 1.0 / (s11_sq + gamma)


def omega_functional(
    scores: ScoreMatrix,
    selection: PreselectionResult,
    weighted: bool = True,
    block_length: int | None = None,
    alternative: str = "amoc",
) -> StatisticValue:
    """Summed functional statistic over the selected score pairs."""
    if selection.n_pairs == 0:
        raise ValueError("no retained pairs; lower the thresholds")
    if alternative not in ("amoc", "epidemic"):
        raise ValueError(f"unknown alternative {alternative!r}")
    s_vals = scores.values
    n = s_vals.shape[0]
    kb = block_length if block_length is not None else default_block_length(n)
    products = s_vals[:, selection.pairs[:, 0]] * s_vals[:, selection.pairs[:, 1]]
    s = partial_sums(products)
    if weighted:
        w = functional_weights(products, selection.s11_sq, kb, alternative)
        kind = "functional-weighted"
    else:
        w = np.ones(products.shape[1])
        kind = "functional-unweighted"
    if alternative == "amoc":
        profile = (s**2) @ w
        value = float(profile.mean())
        changepoint = _amoc_changepoint(profile)
    else:
        per_comp = n * (s**2).sum(axis=0) - s.sum(axis=0) ** 2
        value = float((w * per_comp).sum() / n)
        if n <= 1000:
            _, changepoint = _episode_scan(s, w)
        else:
            changepoint = _episode_heuristic(s, w)
    return StatisticValue(
        value=value,
        kind=kind,
        alternative=alternative,
        changepoint=changepoint,
        n_components=int(products.shape[1]),
    )


def functional_norm_oracle(x: FunctionalSample, k: int) -> float:
    """Squared norm of the bivariate product partial sum, by quadrature.

    Builds ``S_k(u, s) = n**-0.5 * sum_{t<=k} (X_t(u) X_t(s) - mean)`` on
    the full grid and integrates its square with the product quadrature.
    Quadratic in the grid size; intended for small grids as a reference
    value.
    """
    n = x.n_obs
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    v = x.values
    head = v[:k].T @ v[:k]
    total = v.T @ v
    m = (head - (k / n) * total) / np.sqrt(n)
    w = x.domain.weights
    return float(((m * w[None, :]) * w[:, None] * m).sum())
