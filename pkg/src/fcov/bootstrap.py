"""Circular block bootstrap for the change statistics.

The observed statistic is computed once from the score products.  The
products are then corrected for the estimated change, and the corrected
residuals are resampled in circular blocks; every replicate re-estimates
its own changepoint and long-run variances so the replicate distribution
mimics the full estimation pipeline.  Replicate ``b`` depends only on
``(seed, b)``, which makes results independent of the thread count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cusum import (
    PreselectionResult,
    StatisticValue,
    lambda_max,
    lambda_max_epidemic,
    omega_amoc,
    omega_epidemic,
    omega_functional,
    partial_sums,
    preselect_pairs,
)
from .scores import (
    ScoreMatrix,
    ScoreProductSeries,
    block_longrun_variance,
    correct_residuals,
    default_block_length,
    vech_products,
)

__all__ = [
    "BootstrapConfig",
    "BootstrapOutcome",
    "KINDS",
    "bootstrap_test",
    "circular_block_resample",
    "observed_statistic",
    "replicate_starts",
]

KINDS = (
    "multivariate-sum",
    "multivariate-max",
    "functional-unweighted",
    "functional-weighted",
)


@dataclass(frozen=True)
class BootstrapConfig:
    """Settings for :func:`bootstrap_test`.

    ``block_length`` of ``None`` uses the cube-root default.  ``eps1`` and
    ``eps2`` only matter for the functional kinds.  ``component_pvalues``
    requests a p-value per product component (summed kinds only).
    """

    replicates: int = 1000
    block_length: int | None = None
    seed: int = 0
    alternative: str = "amoc"
    kind: str = "multivariate-sum"
    eps1: float = 5e-4
    eps2: float = 2.5e-3
    threads: int = 1
    component_pvalues: bool = False


@dataclass(frozen=True)
class BootstrapOutcome:
    """Observed statistic, replicate distribution and the resulting p-value.

    ``pair_index`` lists the 0-based score pairs behind the product
    components that entered the statistic, aligned with
    ``component_pvalues`` when those were requested.
    """

    observed: StatisticValue
    replicate_values: np.ndarray
    p_value: float
    block_length: int
    pair_index: np.ndarray
    config: BootstrapConfig
    selection: PreselectionResult | None = None
    component_pvalues: np.ndarray | None = None
    backend: str = kernels.BACKEND

    def critical_value(self, alpha: float = 0.05) -> float:
        """Empirical ``1 - alpha`` quantile of the replicate values."""
        return float(np.quantile(self.replicate_values, 1.0 - alpha))

    def reject(self, alpha: float = 0.05) -> bool:
        return self.p_value <= alpha


def replicate_starts(n: int, n_starts: int, n_replicates: int, seed: int) -> np.ndarray:
    """Block start offsets, one row per replicate.

    Row ``b`` is drawn from its own generator spawned off ``seed``, so it
    is a pure function of ``(seed, b)`` no matter how the replicates are
    later distributed over threads.
    """
    children = np.random.SeedSequence(seed).spawn(n_replicates)
    out = np.empty((n_replicates, n_starts), dtype=np.int64)
    for b, child in enumerate(children):
        out[b] = np.random.default_rng(child).integers(0, n, n_starts)
    return out


def circular_block_resample(
    values: np.ndarray, block_length: int, rng: np.random.Generator
) -> np.ndarray:
    """One circular block resample of the rows of ``values``.

    Blocks of ``block_length`` consecutive rows (wrapping around) start at
    uniformly drawn offsets; the concatenation is truncated to the input
    length.
    """
    vals = np.asarray(values)
    n = vals.shape[0]
    if not 1 <= block_length <= n:
        raise ValueError(f"block length must be in [1, {n}]")
    starts = rng.integers(0, n, n // block_length + 1)
    idx = (starts[:, None] + np.arange(block_length)[None, :]) % n
    return vals[idx.reshape(-1)[:n]]


def _run_kernel(resid, starts, block, mode, s11_sq, epidemic, max_type, want, threads):
    if threads <= 1 or starts.shape[0] < 2 * threads:
        return kernels.bootstrap_replicates(
            resid, starts, block, mode, s11_sq, epidemic, max_type, want
        )
    bounds = np.linspace(0, starts.shape[0], threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(
                kernels.bootstrap_replicates,
                resid,
                starts[lo:hi],
                block,
                mode,
                s11_sq,
                epidemic,
                max_type,
                want,
            )
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        parts = [f.result() for f in futures]
    values = np.concatenate([p[0] for p in parts])
    comps = np.concatenate([p[1] for p in parts]) if want else np.zeros((0, 0))
    return values, comps


def _observed_components(products: np.ndarray, w: np.ndarray, alternative: str) -> np.ndarray:
    s = partial_sums(products)
    if alternative == "epidemic":
        n = s.shape[0]
        per = n * (s**2).sum(axis=0) - s.sum(axis=0) ** 2
        return w * per / n
    return w * (s**2).mean(axis=0)


def observed_statistic(
    scores,
    kind: str = "multivariate-sum",
    alternative: str = "amoc",
    block_length: int | None = None,
    eps1: float = 5e-4,
    eps2: float = 2.5e-3,
) -> StatisticValue:
    """The test statistic alone, without any resampling.

    Useful when the rejection threshold comes from elsewhere, e.g. a
    simulated limit law or an empirical null quantile.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown statistic kind {kind!r}")
    if isinstance(scores, ScoreMatrix):
        sm = scores
    else:
        vals = np.asarray(scores, dtype=np.float64)
        sm = ScoreMatrix(vals[:, None] if vals.ndim == 1 else vals)
    n = sm.values.shape[0]
    block = block_length if block_length is not None else default_block_length(n)
    if kind.startswith("functional"):
        selection = preselect_pairs(sm, eps1, eps2, block, alternative)
        return omega_functional(
            sm, selection, kind == "functional-weighted", block, alternative
        )
    products = vech_products(sm)
    d_est = block_longrun_variance(
        correct_residuals(products.values, alternative).values, block
    )
    s = partial_sums(products.values)
    if kind == "multivariate-max":
        stat = lambda_max_epidemic if alternative == "epidemic" else lambda_max
    else:
        stat = omega_epidemic if alternative == "epidemic" else omega_amoc
    return stat(s, d_est)


def bootstrap_test(scores, config: BootstrapConfig | None = None) -> BootstrapOutcome:
    """Test for a covariance change by bootstrapping the score products.

    ``scores`` is a :class:`ScoreMatrix` (or plain ``(n, d)`` array).  A
    :class:`ScoreProductSeries` is also accepted for the multivariate
    kinds, which then test the given components as-is; the functional
    kinds need the underlying scores for pair screening and reject it.
    The multivariate kinds use every product of score pairs; the
    functional kinds first screen the pairs and, when weighted, scale
    each component by the inverse of ``s11_sq`` plus its own long-run
    variance (the reference variance stays fixed across replicates, the
    component one is re-estimated).  Returns the one-sided p-value
    ``(1 + #{replicates >= observed}) / (replicates + 1)``.
    """
    cfg = config if config is not None else BootstrapConfig()
    if cfg.kind not in KINDS:
        raise ValueError(f"unknown statistic kind {cfg.kind!r}")
    if cfg.alternative not in ("amoc", "epidemic"):
        raise ValueError(f"unknown alternative {cfg.alternative!r}")
    if cfg.replicates < 1:
        raise ValueError("need at least one replicate")
    if cfg.threads < 1:
        raise ValueError("threads must be positive")
    given_products = isinstance(scores, ScoreProductSeries)
    if given_products:
        if cfg.kind.startswith("functional"):
            raise TypeError("functional kinds screen score pairs and need the ScoreMatrix")
        s_vals = scores.values
    else:
        s_vals = scores.values if isinstance(scores, ScoreMatrix) else np.asarray(scores, dtype=np.float64)
        if s_vals.ndim == 1:
            s_vals = s_vals[:, None]
    n = s_vals.shape[0]
    block = cfg.block_length if cfg.block_length is not None else default_block_length(n)
    if not 1 <= block <= n:
        raise ValueError(f"block length must be in [1, {n}]")
    epidemic = cfg.alternative == "epidemic"
    max_type = cfg.kind == "multivariate-max"
    if cfg.component_pvalues and max_type:
        raise ValueError("component p-values only apply to the summed kinds")

    sm = None
    if not given_products:
        sm = scores if isinstance(scores, ScoreMatrix) else ScoreMatrix(s_vals)
    selection = None
    if cfg.kind.startswith("functional"):
        weighted = cfg.kind == "functional-weighted"
        selection = preselect_pairs(sm, cfg.eps1, cfg.eps2, block, cfg.alternative)
        pair_index = selection.pairs
        products = s_vals[:, pair_index[:, 0]] * s_vals[:, pair_index[:, 1]]
        mode = 2 if weighted else 1
        s11_sq = selection.s11_sq if weighted else 0.0
        observed = omega_functional(sm, selection, weighted, block, cfg.alternative)
        resid = correct_residuals(products, cfg.alternative).values
        obs_weights = None
        if cfg.component_pvalues:
            if weighted:
                gamma = block_longrun_variance(resid, block).variances
                obs_weights = 1.0 / (s11_sq + gamma)
            else:
                obs_weights = np.ones(products.shape[1])
    else:
        prod_series = scores if given_products else vech_products(sm)
        products = prod_series.values
        pair_index = prod_series.pair_index
        mode = 0
        s11_sq = 0.0
        if np.all(products == products[0]):
            # No variation at all: the statistic is identically zero.
            observed = StatisticValue(
                value=0.0,
                kind=cfg.kind,
                alternative=cfg.alternative,
                changepoint=(1, 2) if epidemic else 1,
                n_components=products.shape[1],
            )
            return BootstrapOutcome(
                observed=observed,
                replicate_values=np.zeros(cfg.replicates),
                p_value=1.0,
                block_length=block,
                pair_index=pair_index,
                config=cfg,
                component_pvalues=(
                    np.ones(products.shape[1]) if cfg.component_pvalues else None
                ),
            )
        resid_series = correct_residuals(products, cfg.alternative)
        resid = resid_series.values
        d_est = block_longrun_variance(resid, block)
        s = partial_sums(products)
        if max_type:
            stat = lambda_max_epidemic if epidemic else lambda_max
        else:
            stat = omega_epidemic if epidemic else omega_amoc
        observed = stat(s, d_est)
        obs_weights = None
        if cfg.component_pvalues:
            var = d_est.variances
            obs_weights = np.where(var > 0, 1.0 / np.where(var > 0, var, 1.0), 0.0)

    starts = replicate_starts(n, n // block + 1, cfg.replicates, cfg.seed)
    values, comps = _run_kernel(
        resid,
        starts,
        block,
        mode,
        s11_sq,
        epidemic,
        max_type,
        cfg.component_pvalues,
        cfg.threads,
    )
    p_value = (1 + int(np.count_nonzero(values >= observed.value))) / (cfg.replicates + 1)
    component_pvalues = None
    if cfg.component_pvalues:
        obs_comps = _observed_components(products, obs_weights, cfg.alternative)
        counts = (comps >= obs_comps[None, :]).sum(axis=0)
        component_pvalues = (1 + counts) / (cfg.replicates + 1)
    return BootstrapOutcome(
        observed=observed,
        replicate_values=values,
        p_value=float(p_value),
        block_length=block,
        pair_index=pair_index,
        config=cfg,
        selection=selection,
        component_pvalues=component_pvalues,
    )
