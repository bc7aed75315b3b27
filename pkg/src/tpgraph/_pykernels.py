"""Pure-Python/numpy implementation of the learner's inner kernels.

Mirrors ``_ckernels.pyx`` call for call; used when the compiled extension
is unavailable or ``TPGRAPH_BACKEND=python`` is set.
"""
from __future__ import annotations

import numpy as np

from .rng import stream_uniforms

OK = 0
SINGULAR = 1


def draw_rows(key, position, n, m, work=None):
    """Sample ``m`` distinct rows of ``range(n)`` by partial Fisher-Yates.

    Swaps are tracked in a dict so the cost is O(m) regardless of ``n``.
    """
    u = stream_uniforms(key, position, m)
    displaced = {}
    out = np.empty(m, dtype=np.int64)
    for s in range(m):
        span = n - s
        r = s + min(int(u[s] * span), span - 1)
        out[s] = displaced.get(r, r)
        displaced[r] = displaced.get(s, s)
    return out


def batch_pcorr(data, rows, cols, centered, tol):
    """Partial correlation of the last two ``cols`` given the others.

    Returns ``(status, rho)``; ``rho`` is read off the trailing 2x2 block of
    the Cholesky factor of the batch covariance.
    """
    sub = data[np.ix_(rows, cols)]
    m = sub.shape[0]
    if centered:
        sub = sub - sub.mean(axis=0)
    cov = sub.T @ sub / m
    q = cov.shape[0]
    threshold = tol * np.max(np.diag(cov))
    L = np.zeros_like(cov)
    for k in range(q):
        row = L[k, :k]
        pivot = cov[k, k] - row @ row
        if k == q - 1:
            # a vanishing last pivot means j is collinear with S and i: rho = +-1
            b = L[k, k - 1]
            pivot = pivot if pivot > threshold else 0.0
            if not b * b + pivot > threshold:
                return SINGULAR, 0.0
            L[k, k] = np.sqrt(pivot)
            break
        if not pivot > threshold or pivot <= 0.0:
            return SINGULAR, 0.0
        L[k, k] = np.sqrt(pivot)
        if k + 1 < q:
            L[k + 1:, k] = (cov[k + 1:, k] - L[k + 1:, :k] @ row) / L[k, k]
    b = L[q - 1, q - 2]
    c = L[q - 1, q - 1]
    rho = b / np.sqrt(b * b + c * c)
    return OK, float(min(1.0, max(-1.0, rho)))


def test_pair(data, i, j, cond, witnesses, key, position, m, centered, tol, skip_singular, work=None):
    """Run the sign tests for one (i, j, S) over all witnesses.

    Test ``t`` uses stream ``position + t``. Stops at the first strictly
    negative estimate. Returns ``(deleted, tests_run, singular_skips, failed)``
    where ``failed`` marks a singular batch under the ``error`` policy.
    """
    n = data.shape[0]
    cols = np.empty(len(cond) + 3, dtype=np.int64)
    cols[: len(cond)] = cond
    cols[-2] = i
    cols[-1] = j
    tests = 0
    skips = 0
    for k in witnesses:
        cols[len(cond)] = k
        rows = draw_rows(key, position + tests, n, m)
        tests += 1
        status, rho = batch_pcorr(data, rows, cols, centered, tol)
        if status == SINGULAR:
            if not skip_singular:
                return False, tests, skips, True
            skips += 1
            continue
        if rho < 0.0:
            return True, tests, skips, False
    return False, tests, skips, False
