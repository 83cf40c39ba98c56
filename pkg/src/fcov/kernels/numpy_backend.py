"""Vectorised numpy implementations of the hot kernels.

Operates on batches of bootstrap replicates at once, chunked so the
largest intermediate stays around a few million floats.  Matches the JIT
backend to floating-point reordering accuracy; parity is pinned by tests.
"""
from __future__ import annotations

import numpy as np

__all__ = ["bootstrap_replicates", "bridge_chunk"]

_CHUNK_FLOATS = 4_000_000


def _resample(resid: np.ndarray, starts: np.ndarray, block: int) -> np.ndarray:
    n = resid.shape[0]
    idx = (starts[:, :, None] + np.arange(block)[None, None, :]) % n
    idx = idx.reshape(starts.shape[0], -1)[:, :n]
    return resid[idx]


def _amoc_residuals(q, cs, c, total):
    n = q.shape[1]
    k0 = np.argmax(np.abs(c[:, : n - 1, :]), axis=1)
    pre_sum = np.take_along_axis(cs, k0[:, None, :], axis=1)[:, 0, :]
    pre_cnt = (k0 + 1).astype(np.float64)
    pre_mean = pre_sum / pre_cnt
    post_mean = (total - pre_sum) / (n - pre_cnt)
    t_idx = np.arange(n)[None, :, None]
    return q - np.where(t_idx <= k0[:, None, :], pre_mean[:, None, :], post_mean[:, None, :])


def _prefix_argext(c2: np.ndarray, sign: float):
    """Running extreme of ``sign * c2`` along axis 1 with first-hit indices."""
    vals = sign * c2
    run = np.minimum.accumulate(vals, axis=1)
    prev = np.concatenate([np.full_like(vals[:, :1, :], np.inf), run[:, :-1, :]], axis=1)
    fresh = vals < prev
    steps = np.where(fresh, np.arange(vals.shape[1])[None, :, None], -1)
    return run, np.maximum.accumulate(steps, axis=1)


def _episode_residuals(q, cs, c, total):
    n = q.shape[1]
    c2 = c[:, : n - 1, :]
    run_min, argmin_pref = _prefix_argext(c2, 1.0)
    run_max_neg, argmax_pref = _prefix_argext(c2, -1.0)
    up = c2[:, 1:, :] - run_min[:, :-1, :]
    dn = -(c2[:, 1:, :] + run_max_neg[:, :-1, :])
    j_up = np.argmax(up, axis=1)
    j_dn = np.argmax(dn, axis=1)
    up_best = np.take_along_axis(up, j_up[:, None, :], 1)[:, 0, :]
    dn_best = np.take_along_axis(dn, j_dn[:, None, :], 1)[:, 0, :]
    a_up = np.take_along_axis(argmin_pref[:, :-1, :], j_up[:, None, :], 1)[:, 0, :]
    a_dn = np.take_along_axis(argmax_pref[:, :-1, :], j_dn[:, None, :], 1)[:, 0, :]
    choose = up_best >= dn_best
    a = np.where(choose, a_up, a_dn)
    b = np.where(choose, j_up, j_dn) + 1
    sum_a = np.take_along_axis(cs, a[:, None, :], 1)[:, 0, :]
    sum_b = np.take_along_axis(cs, b[:, None, :], 1)[:, 0, :]
    m1 = sum_a / (a + 1)
    m2 = (sum_b - sum_a) / (b - a)
    m3 = (total - sum_b) / (n - 1 - b)
    t_idx = np.arange(n)[None, :, None]
    means = np.where(
        t_idx <= a[:, None, :], m1[:, None, :],
        np.where(t_idx <= b[:, None, :], m2[:, None, :], m3[:, None, :]),
    )
    return q - means


def _block_variances(r: np.ndarray, block: int) -> np.ndarray:
    nb, n, d = r.shape[0], r.shape[1], r.shape[2]
    nblocks = n // block
    sums = r[:, : nblocks * block, :].reshape(nb, nblocks, block, d).sum(axis=2)
    return (sums**2).sum(axis=1) / n


def _weights(lrv: np.ndarray, mode: int, s11_sq: float, shape) -> np.ndarray:
    if mode == 1:
        return np.ones(shape)
    if mode == 2:
        return 1.0 / (s11_sq + lrv)
    return np.where(lrv > 0, 1.0 / np.where(lrv > 0, lrv, 1.0), 0.0)


def _max_episode_values(c: np.ndarray, w: np.ndarray, n: int) -> np.ndarray:
    best = np.full(c.shape[0], -np.inf)
    for a in range(n - 1):
        diffs = c[:, a + 1 :, :] - c[:, a : a + 1, :]
        vals = np.einsum("bki,bki,bi->bk", diffs, diffs, w)
        np.maximum(best, vals.max(axis=1), out=best)
    return best / n


def bootstrap_replicates(
    resid: np.ndarray,
    starts: np.ndarray,
    block: int,
    mode: int,
    s11_sq: float,
    epidemic: bool,
    max_type: bool,
    want_components: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Statistic values for circular block resamples of ``resid``.

    ``starts[b]`` holds the 0-based block start offsets of replicate ``b``.
    ``mode``: 0 weights by inverse block variance, 1 unweighted, 2 weights
    by ``1 / (s11_sq + block variance)``.  Returns one value per replicate
    and, if requested, the per-component contributions for the summed
    kinds.
    """
    n, d = resid.shape
    n_rep = starts.shape[0]
    values = np.empty(n_rep)
    comps = np.zeros((n_rep, d)) if want_components and not max_type else np.zeros((0, 0))
    step = max(1, int(_CHUNK_FLOATS // max(1, n * d)))
    frac = np.arange(1, n + 1, dtype=np.float64)[None, :, None] / n
    for lo in range(0, n_rep, step):
        hi = min(lo + step, n_rep)
        q = _resample(resid, starts[lo:hi], block)
        cs = np.cumsum(q, axis=1)
        total = cs[:, -1, :]
        c = cs - frac * total[:, None, :]
        if mode == 1:
            lrv = None
        else:
            if epidemic:
                r = _episode_residuals(q, cs, c, total)
            else:
                r = _amoc_residuals(q, cs, c, total)
            lrv = _block_variances(r, block)
        w = _weights(lrv, mode, s11_sq, (hi - lo, d))
        if max_type:
            if epidemic:
                values[lo:hi] = _max_episode_values(c, w, n)
            else:
                prof = np.einsum("bki,bki,bi->bk", c, c, w)
                values[lo:hi] = prof.max(axis=1) / n
        elif epidemic:
            per = (c**2).sum(axis=1) - c.sum(axis=1) ** 2 / n
            contrib = w * per / n
            values[lo:hi] = contrib.sum(axis=1)
            if comps.size:
                comps[lo:hi] = contrib
        else:
            contrib = w * (c**2).sum(axis=1) / (n * n)
            values[lo:hi] = contrib.sum(axis=1)
            if comps.size:
                comps[lo:hi] = contrib
    return values, comps


def bridge_chunk(z: np.ndarray, kind: int) -> np.ndarray:
    """Limit functionals evaluated on a chunk of simulated bridges.

    ``z`` holds standard normal increments, shape (draws, dim, R).  Kinds:
    0 integrated squared norm, 1 integrated squared pair increments,
    2 maximum squared norm, 3 maximum squared pair increment.
    """
    n_draws, dim, res = z.shape
    w = np.cumsum(z, axis=2) / np.sqrt(res)
    frac = np.arange(1, res + 1, dtype=np.float64) / res
    bridge = w - frac[None, None, :] * w[:, :, -1:]
    if kind == 0:
        return (bridge**2).sum(axis=(1, 2)) / res
    if kind == 1:
        per = res * (bridge**2).sum(axis=2) - bridge.sum(axis=2) ** 2
        return per.sum(axis=1) / (res * res)
    if kind == 2:
        return (bridge**2).sum(axis=1).max(axis=1)
    if kind == 3:
        best = np.full(n_draws, -np.inf)
        for i in range(res - 1):
            diffs = bridge[:, :, i + 1 :] - bridge[:, :, i : i + 1]
            np.maximum(best, (diffs**2).sum(axis=1).max(axis=1), out=best)
        return best
    raise ValueError(f"unknown functional kind {kind}")
