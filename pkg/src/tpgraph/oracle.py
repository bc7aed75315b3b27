"""Brute-force reference checks, kept independent of the production code paths.

Partial correlations here come from least-squares residuals solved with
full-pivot Gaussian elimination, never from the Cholesky routines in
``stats`` or the kernels.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .learner import batch_size
from .rng import stream_key
from . import kernels


class RankDeficientError(ArithmeticError):
    pass


def solve_full_pivot(A, b, rtol: float = 1e-13) -> np.ndarray:
    """Solve ``A x = b`` by Gaussian elimination with complete pivoting.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    A = np.array(A, dtype=np.float64)
    B = np.array(b, dtype=np.float64)
    vector = B.ndim == 1
    if vector:
        B = B[:, None]
    n = A.shape[0]
    perm = list(range(n))
    scale = np.max(np.abs(A)) if n else 0.0
    for k in range(n):
        sub = np.abs(A[k:, k:])
        r, c = np.unravel_index(np.argmax(sub), sub.shape)
        r += k
        c += k
        if sub.size == 0 or abs(A[r, c]) <= rtol * scale:
            raise RankDeficientError(f"rank-deficient system at step {k}")
        A[[k, r]] = A[[r, k]]
        B[[k, r]] = B[[r, k]]
        A[:, [k, c]] = A[:, [c, k]]
        perm[k], perm[c] = perm[c], perm[k]
        for row in range(k + 1, n):
            f = A[row, k] / A[k, k]
            A[row, k:] -= f * A[k, k:]
            B[row] -= f * B[k]
    y = np.zeros_like(B)
    for k in range(n - 1, -1, -1):
        y[k] = (B[k] - A[k, k + 1:] @ y[k + 1:]) / A[k, k]
    x = np.zeros_like(y)
    x[perm] = y
    return x[:, 0] if vector else x


def partial_correlation_oracle(source, i: int, j: int, s=(), *, data: bool = False,
                               centered: bool = False) -> float:
    """Correlation of the residuals of ``X_i`` and ``X_j`` regressed on ``X_S``.

    ``source`` is a covariance matrix, or with ``data=True`` an N x p sample
    matrix; then residuals come from an explicit regression (with intercept
    when ``centered``) and their correlation is Pearson (``centered``) or
    uncentered.
    """
    s = list(s)
    if data:
        X = np.asarray(source, dtype=np.float64)
        Z = X[:, s]
        if centered:
            Z = np.column_stack([np.ones(X.shape[0]), Z])
        y = X[:, [i, j]]
        if Z.shape[1]:
            coef = solve_full_pivot(Z.T @ Z, Z.T @ y)
            res = y - Z @ coef
        else:
            res = y
        if centered:
            res = res - res.mean(axis=0)
        a, b = res[:, 0], res[:, 1]
        return float(a @ b / math.sqrt((a @ a) * (b @ b)))
    C = np.asarray(source, dtype=np.float64)
    y = [i, j]
    resid = C[np.ix_(y, y)]
    if s:
        coef = solve_full_pivot(C[np.ix_(s, s)], C[np.ix_(s, y)])
        resid = resid - C[np.ix_(y, s)] @ coef
    return float(resid[0, 1] / math.sqrt(resid[0, 0] * resid[1, 1]))


@dataclass(frozen=True)
class SeparationQuery:
    graph: object
    i: int
    j: int
    s: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "s", frozenset(self.s))
        if self.i == self.j or self.i in self.s or self.j in self.s:
            raise ValueError("i, j must differ and lie outside s")


def is_separated(query: SeparationQuery) -> bool:
    """True iff every path from ``i`` to ``j`` passes through ``s`` (BFS)."""
    g, blocked = query.graph, query.s
    seen = {query.i}
    queue = deque([query.i])
    while queue:
        v = queue.popleft()
        for w in g.neighbors(v):
            if w == query.j:
                return False
            if w not in seen and w not in blocked:
                seen.add(w)
                queue.append(w)
    return True


def _rho(sigma, i, j, s):
    return partial_correlation_oracle(sigma, i, j, s)


def mtp2_faithfulness_check(model, max_set: int) -> dict:
    """Enumerate ``(i, j, S)`` with ``|S| <= max_set`` against the support graph.

    Separated pairs need ``|rho| <= 1e-8``; connected pairs need
    ``rho >= -1e-10``. Connected pairs with ``rho < 1e-12`` are counted
    under ``weak_positive`` but are not violations.
    """
    from .graph import graph_from_precision

    graph = graph_from_precision(model)
    sigma = np.asarray(model.sigma)
    p = model.p
    violations = []
    weak = 0
    checked = 0
    for i, j in combinations(range(p), 2):
        rest = [v for v in range(p) if v not in (i, j)]
        for size in range(min(max_set, len(rest)) + 1):
            for s in combinations(rest, size):
                rho = _rho(sigma, i, j, s)
                checked += 1
                if is_separated(SeparationQuery(graph, i, j, s)):
                    if abs(rho) > 1e-8:
                        violations.append(("separated", i, j, s, rho))
                else:
                    if rho < -1e-10:
                        violations.append(("negative", i, j, s, rho))
                    elif rho < 1e-12:
                        weak += 1
    return {"violations": violations, "weak_positive": weak, "checked": checked}


def monotonicity_lemma_check(model) -> list:
    """Violations of ``rho_{ij|S} >= rho_{ij|rest} - 1e-10`` over every ``S``."""
    sigma = np.asarray(model.sigma)
    p = model.p
    if p > 10:
        raise ValueError("exhaustive check limited to p <= 10")
    violations = []
    for i, j in combinations(range(p), 2):
        rest = [v for v in range(p) if v not in (i, j)]
        floor = _rho(sigma, i, j, rest)
        for size in range(len(rest) + 1):
            for s in combinations(rest, size):
                rho = _rho(sigma, i, j, s)
                if rho < floor - 1e-10:
                    violations.append((i, j, s, rho, floor))
    return violations


def overlap_tail_check(n: int, gamma: float, k: int, epsilon: float, trials: int, seed: int) -> tuple:
    """Monte Carlo rate of ``max |B_a & B_b| >= M^2/N + eps N`` versus its tail bound.

    Batches are drawn with the learner's sampler, ``k``
    per trial on consecutive stream positions. Returns
    ``(empirical_rate, bound)`` with ``bound = exp(-2 eps^2 N + 2 log K)``.
    """
    m = batch_size(n, gamma)
    if m < 1 or trials < 1:
        raise ValueError("need M >= 1 and trials >= 1")
    threshold = m * m / n + epsilon * n
    key = stream_key(seed)
    hits = 0
    for t in range(trials):
        if k < 2:
            continue
        masks = np.zeros((k, n), dtype=np.int32)
        for b in range(k):
            masks[b, kernels.draw_rows(key, t * k + b, n, m)] = 1
        overlap = masks @ masks.T
        np.fill_diagonal(overlap, 0)
        if overlap.max() >= threshold:
            hits += 1
    bound = math.exp(-2.0 * epsilon ** 2 * n + 2.0 * math.log(k))
    return hits / trials, bound
