"""JIT-compiled loop implementations of the hot kernels.

Single-threaded by design: callers parallelise over replicate chunks, and
``nogil=True`` lets those chunks overlap in a thread pool without any
cross-replicate state.  Compiled artifacts are cached on disk.
"""
from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["bootstrap_replicates", "bridge_chunk"]


@njit(cache=True, nogil=True)
def _one_replicate(resid, starts_b, block, mode, s11_sq, epidemic, max_type, q, c, r, w, prof, comp_out):
    n, d = resid.shape
    # Circular block resample laid out in q.
    for p in range(n):
        j = p // block
        src = (starts_b[j] + (p - j * block)) % n
        for i in range(d):
            q[p, i] = resid[src, i]
    # Centered partial sums per component (c holds sum_{t<=k} q - (k/n) total).
    for i in range(d):
        tot = 0.0
        for t in range(n):
            tot += q[t, i]
        run = 0.0
        for t in range(n):
            run += q[t, i]
            c[t, i] = run - (t + 1) * tot / n
        if mode != 1:
            # Change-corrected residuals for the variance estimate.
            if epidemic:
                run_min = c[0, i]
                min_idx = 0
                run_max = c[0, i]
                max_idx = 0
                up = -np.inf
                dn = -np.inf
                a_u = 0
                b_u = 1
                a_d = 0
                b_d = 1
                for t in range(1, n - 1):
                    v = c[t, i]
                    if v - run_min > up:
                        up = v - run_min
                        a_u = min_idx
                        b_u = t
                    if run_max - v > dn:
                        dn = run_max - v
                        a_d = max_idx
                        b_d = t
                    if v < run_min:
                        run_min = v
                        min_idx = t
                    if v > run_max:
                        run_max = v
                        max_idx = t
                if up >= dn:
                    a = a_u
                    b = b_u
                else:
                    a = a_d
                    b = b_d
                sum_a = c[a, i] + (a + 1) * tot / n
                sum_b = c[b, i] + (b + 1) * tot / n
                m1 = sum_a / (a + 1)
                m2 = (sum_b - sum_a) / (b - a)
                m3 = (tot - sum_b) / (n - 1 - b)
                for t in range(n):
                    if t <= a:
                        r[t, i] = q[t, i] - m1
                    elif t <= b:
                        r[t, i] = q[t, i] - m2
                    else:
                        r[t, i] = q[t, i] - m3
            else:
                best = -1.0
                k0 = 0
                for t in range(n - 1):
                    v = abs(c[t, i])
                    if v > best:
                        best = v
                        k0 = t
                pre_sum = c[k0, i] + (k0 + 1) * tot / n
                m_pre = pre_sum / (k0 + 1)
                m_post = (tot - pre_sum) / (n - 1 - k0)
                for t in range(n):
                    if t <= k0:
                        r[t, i] = q[t, i] - m_pre
                    else:
                        r[t, i] = q[t, i] - m_post
            nblocks = n // block
            acc = 0.0
            for jj in range(nblocks):
                bs = 0.0
                base = jj * block
                for t in range(base, base + block):
                    bs += r[t, i]
                acc += bs * bs
            lrv = acc / n
            if mode == 0:
                w[i] = 1.0 / lrv if lrv > 0.0 else 0.0
            else:
                w[i] = 1.0 / (s11_sq + lrv)
        else:
            w[i] = 1.0
    # Statistic on the resampled series.
    if max_type:
        if epidemic:
            best = -np.inf
            for a in range(n - 1):
                for b in range(a + 1, n):
                    acc = 0.0
                    for i in range(d):
                        dv = c[b, i] - c[a, i]
                        acc += w[i] * dv * dv
                    if acc > best:
                        best = acc
            return best / n
        for t in range(n):
            acc = 0.0
            for i in range(d):
                acc += w[i] * c[t, i] * c[t, i]
            prof[t] = acc
        best = prof[0]
        for t in range(1, n):
            if prof[t] > best:
                best = prof[t]
        return best / n
    value = 0.0
    if epidemic:
        for i in range(d):
            sumsq = 0.0
            sumc = 0.0
            for t in range(n):
                sumsq += c[t, i] * c[t, i]
                sumc += c[t, i]
            contrib = w[i] * (sumsq - sumc * sumc / n) / n
            comp_out[i] = contrib
            value += contrib
    else:
        for i in range(d):
            sumsq = 0.0
            for t in range(n):
                sumsq += c[t, i] * c[t, i]
            contrib = w[i] * sumsq / (n * n)
            comp_out[i] = contrib
            value += contrib
    return value


@njit(cache=True, nogil=True)
def _replicate_loop(resid, starts, block, mode, s11_sq, epidemic, max_type, want_components):
    n, d = resid.shape
    n_rep = starts.shape[0]
    values = np.empty(n_rep)
    if want_components and not max_type:
        comps = np.zeros((n_rep, d))
    else:
        comps = np.zeros((0, 0))
    q = np.empty((n, d))
    c = np.empty((n, d))
    r = np.empty((n, d))
    w = np.empty(d)
    prof = np.empty(n)
    comp_out = np.empty(d)
    for b in range(n_rep):
        values[b] = _one_replicate(
            resid, starts[b], block, mode, s11_sq, epidemic, max_type, q, c, r, w, prof, comp_out
        )
        if comps.shape[0] > 0:
            for i in range(d):
                comps[b, i] = comp_out[i]
    return values, comps


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
    """Statistic values for circular block resamples; see the numpy twin."""
    return _replicate_loop(
        np.ascontiguousarray(resid, dtype=np.float64),
        np.ascontiguousarray(starts, dtype=np.int64),
        int(block),
        int(mode),
        float(s11_sq),
        bool(epidemic),
        bool(max_type),
        bool(want_components),
    )


@njit(cache=True, nogil=True)
def _bridge_loop(z, kind):
    n_draws, dim, res = z.shape
    out = np.empty(n_draws)
    bridge = np.empty((dim, res))
    scale = 1.0 / np.sqrt(res)
    for m in range(n_draws):
        for l in range(dim):
            run = 0.0
            for j in range(res):
                run += z[m, l, j]
                bridge[l, j] = run * scale
            last = bridge[l, res - 1]
            for j in range(res):
                bridge[l, j] -= (j + 1) / res * last
        if kind == 0:
            acc = 0.0
            for l in range(dim):
                for j in range(res):
                    acc += bridge[l, j] * bridge[l, j]
            out[m] = acc / res
        elif kind == 1:
            acc = 0.0
            for l in range(dim):
                sumsq = 0.0
                s = 0.0
                for j in range(res):
                    sumsq += bridge[l, j] * bridge[l, j]
                    s += bridge[l, j]
                acc += res * sumsq - s * s
            out[m] = acc / (res * res)
        elif kind == 2:
            best = -np.inf
            for j in range(res):
                acc = 0.0
                for l in range(dim):
                    acc += bridge[l, j] * bridge[l, j]
                if acc > best:
                    best = acc
            out[m] = best
        else:
            best = -np.inf
            for i in range(res - 1):
                for j in range(i + 1, res):
                    acc = 0.0
                    for l in range(dim):
                        dv = bridge[l, j] - bridge[l, i]
                        acc += dv * dv
                    if acc > best:
                        best = acc
            out[m] = best
    return out


def bridge_chunk(z: np.ndarray, kind: int) -> np.ndarray:
    """Limit functionals on a chunk of simulated bridges; see the numpy twin."""
    if kind not in (0, 1, 2, 3):
        raise ValueError(f"unknown functional kind {kind}")
    return _bridge_loop(np.ascontiguousarray(z, dtype=np.float64), int(kind))
