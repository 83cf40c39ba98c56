"""Independent reference implementations used to cross-check the package.

Everything here is deliberately slow and simple: a cyclic Jacobi
eigensolver that avoids numpy.linalg, quadratic brute-force scans for the
episode statistics, and direct transcriptions of the statistic
definitions.  Tests compare the optimised package code against these.
"""
import numpy as np


def jacobi_eigh(a, tol=1e-13, max_sweeps=60):
    """Eigenvalues and eigenvectors of a symmetric matrix by Jacobi rotations.

    Returns eigenvalues in descending order and the matching eigenvectors
    as columns.  Independent of ``numpy.linalg`` apart from array ops.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * max(1.0, np.abs(np.diag(a)).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    w = np.diag(a).copy()
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def amoc_profile_brute(s, w):
    """Per-k weighted quadratic form, one loop at a time."""
    n, d = s.shape
    out = np.empty(n)
    for k in range(n):
        acc = 0.0
        for i in range(d):
            acc += w[i] * s[k, i] ** 2
        out[k] = acc
    return out


def epidemic_sum_brute(s, w):
    """Literal double sum over all pairs k1 < k2 of weighted differences.

    Equals the closed form ``sum_i w_i (n * sum_k s**2 - (sum_k s)**2) / n``
    used by the fast path.
    """
    n, d = s.shape
    total = 0.0
    for k1 in range(n):
        for k2 in range(k1 + 1, n):
            diff = s[k2] - s[k1]
            total += float(np.sum(w * diff * diff))
    return total / n


def episode_max_brute(s, w):
    """Max weighted squared difference and its restricted argmax pair.

    The maximum runs over every ``1 <= k1 < k2 <= n``; the reported pair
    is the best one with ``k2 <= n - 1`` (1-based), matching the package
    convention that the post-episode segment is non-empty.
    """
    n, _ = s.shape
    best = -np.inf
    best_pair_val = -np.inf
    pair = (1, 2)
    for k1 in range(n):
        for k2 in range(k1 + 1, n):
            diff = s[k2] - s[k1]
            val = float(np.sum(w * diff * diff))
            if val > best:
                best = val
            if k2 <= n - 2 and val > best_pair_val:
                best_pair_val = val
                pair = (k1 + 1, k2 + 1)
    return best, pair


def component_changepoint_brute(q):
    """1-based argmax of |centered partial sum| over k = 1..n-1."""
    q = np.asarray(q, dtype=np.float64)
    n = q.size
    total = q.sum()
    best = -np.inf
    best_k = 1
    for k in range(1, n):
        c = q[:k].sum() - k * total / n
        if abs(c) > best:
            best = abs(c)
            best_k = k
    return best_k


def spectrum_by_svd(x_values, weights):
    """Covariance-operator eigenvalues via singular values of the data.

    The discretised operator is ``C @ diag(w)`` with
    ``C = centered.T @ centered / n``; its spectrum equals the squared
    singular values of ``centered * sqrt(w) / sqrt(n)``.
    """
    centered = x_values - x_values.mean(axis=0)
    b = centered * np.sqrt(weights)[None, :] / np.sqrt(x_values.shape[0])
    sv = np.linalg.svd(b, compute_uv=False)
    return sv**2


def vech_pairs_brute(d):
    """Row-major upper-triangular index pairs, one python loop."""
    out = []
    for l1 in range(d):
        for l2 in range(l1, d):
            out.append((l1, l2))
    return out


def circular_blocks_brute(values, starts, block_length):
    """Concatenate wrapped blocks by explicit indexing, truncated to n."""
    n = values.shape[0]
    rows = []
    for s in starts:
        for j in range(block_length):
            rows.append(values[(s + j) % n])
    return np.array(rows[:n])
