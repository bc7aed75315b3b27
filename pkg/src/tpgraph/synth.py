"""Synthetic M-matrix precision models (grid, random, chain) and condition diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .graph import graph_from_precision
from .rng import check_seed, philox
from .stats import PrecisionModel, spd_inverse

DELTA_FACTOR = 1.05
POWER_TOL = 1e-10
POWER_MAX_ITER = 1_000_000
EXHAUSTIVE_P = 12


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    p: int
    density: float = 0.01
    r: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.family not in ("grid", "random", "chain"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.p < 2:
            raise ValueError("p must be at least 2")
        if self.family == "grid":
            side = math.isqrt(self.p)
            if side * side != self.p or side < 2:
                raise ValueError(f"p must be a perfect square for the grid family, got {self.p}")
        if self.family == "random" and not 0.0 < self.density < 1.0:
            raise ValueError(f"density must lie in (0, 1), got {self.density}")
        if self.family == "chain" and not abs(self.r) < 1.0:
            raise ValueError(f"|r| must be below 1, got {self.r}")
        check_seed(self.seed)

    @property
    def label(self) -> str:
        if self.family == "random":
            return f"random:p={self.p}:density={self.density!r}"
        if self.family == "chain":
            return f"chain:p={self.p}:r={self.r!r}"
        return f"grid:p={self.p}"

    def build(self) -> PrecisionModel:
        if self.family == "grid":
            return generate_grid(self.p, self.seed)
        if self.family == "random":
            return generate_random(self.p, self.density, self.seed)
        return generate_chain(self.p, self.r)


def largest_eigenvalue(B: np.ndarray, tol: float = POWER_TOL) -> float:
    """Largest eigenvalue of a symmetric nonnegative matrix by shifted power iteration.

    Iterates on ``B + c I`` with ``c`` the largest absolute row sum, so the
    Perron root dominates even for bipartite supports, and stops once the
    eigen-residual ``|A v - q v|`` of the Rayleigh quotient ``q`` is below
    ``tol * q``, which bounds the eigenvalue error by the same amount.
    """
    B = np.asarray(B, dtype=np.float64)
    p = B.shape[0]
    shift = float(np.max(np.sum(np.abs(B), axis=1)))
    if shift == 0.0:
        return 0.0
    A = B + shift * np.eye(p)
    # fixed perturbation keeps the start off any eigenvector orthogonal to the Perron vector
    v = np.ones(p) + 1e-3 * np.cos(np.arange(p) + 1.0)
    v /= np.linalg.norm(v)
    for _ in range(POWER_MAX_ITER):
        w = A @ v
        value = float(v @ w)
        if np.linalg.norm(w - value * v) <= tol * value:
            break
        v = w / np.linalg.norm(w)
    else:
        raise ArithmeticError("power iteration did not converge")
    return value - shift


def normalize_m_matrix(B: np.ndarray) -> PrecisionModel:
    """``theta = D (delta I - B) D`` with ``delta = 1.05 lambda_1(B)`` and unit-diagonal covariance."""
    p = B.shape[0]
    lam = largest_eigenvalue(B)
    # an empty support has lambda_1 = 0; delta = 1 keeps theta_tilde = I positive definite
    delta = DELTA_FACTOR * lam if lam > 0.0 else 1.0
    theta_tilde = delta * np.eye(p) - B
    sigma_tilde = spd_inverse(theta_tilde)
    d = np.sqrt(np.diag(sigma_tilde))
    theta = d[:, None] * theta_tilde * d[None, :]
    sigma = sigma_tilde / d[:, None] / d[None, :]
    sigma = (sigma + sigma.T) / 2.0
    return PrecisionModel(theta, sigma, True)


def grid_adjacency(side: int) -> np.ndarray:
    p = side * side
    B = np.zeros((p, p))
    for r in range(side):
        for c in range(side):
            v = r * side + c
            if c + 1 < side:
                B[v, v + 1] = B[v + 1, v] = 1.0
            if r + 1 < side:
                B[v, v + side] = B[v + side, v] = 1.0
    return B


def generate_grid(p: int, seed: int = 0) -> PrecisionModel:
    """Grid family on a ``sqrt(p) x sqrt(p)`` lattice. ``seed`` is accepted for uniformity."""
    GeneratorSpec("grid", p, seed=seed)
    return normalize_m_matrix(grid_adjacency(math.isqrt(p)))


def random_weights(p: int, density: float, seed: int) -> np.ndarray:
    """Symmetric weights: each upper-triangle entry is nonzero with probability ``density``, value in (0, 1]."""
    rng = philox(seed)
    iu = np.triu_indices(p, k=1)
    present = rng.random(iu[0].size) < density
    values = 1.0 - rng.random(iu[0].size)
    B = np.zeros((p, p))
    B[iu] = np.where(present, values, 0.0)
    return B + B.T


def generate_random(p: int, density: float = 0.01, seed: int = 0) -> PrecisionModel:
    GeneratorSpec("random", p, density=density, seed=seed)
    return normalize_m_matrix(random_weights(p, density, seed))


def chain_covariance(p: int, r: float) -> np.ndarray:
    idx = np.arange(p)
    return float(r) ** np.abs(idx[:, None] - idx[None, :])


def generate_chain(p: int, r: float = 0.9) -> PrecisionModel:
    GeneratorSpec("chain", p, r=r)
    sigma = chain_covariance(p, r)
    theta = spd_inverse(sigma)
    # entries off the tridiagonal are zero analytically
    band = np.abs(np.subtract.outer(np.arange(p), np.arange(p))) <= 1
    theta = np.where(band, theta, 0.0)
    return PrecisionModel(theta, sigma, 0.0 <= r < 1.0)


def condition_report(model: PrecisionModel, d_hat: int, n: int, subset_samples: int = 200,
                     seed: int = 0) -> dict:
    """Measurable quantities behind the eigenvalue, signal-strength and size conditions.

    Purely diagnostic. Subsets for the eigenvalue check have size
    ``min(d_hat + 4, p)`` and are enumerated exhaustively when ``p <= 12``,
    otherwise ``subset_samples`` of them are drawn at random.
    """
    if subset_samples < 1:
        raise ValueError("subset_samples must be positive")
    p = model.p
    size = min(d_hat + 4, p)
    sigma = model.sigma
    if p <= EXHAUSTIVE_P:
        subsets = list(combinations(range(p), size))
        exhaustive = True
    else:
        rng = philox(seed)
        subsets = [tuple(sorted(rng.choice(p, size, replace=False))) for _ in range(subset_samples)]
        exhaustive = False
    lo, hi = math.inf, -math.inf
    for sub in subsets:
        ev = np.linalg.eigvalsh(sigma[np.ix_(sub, sub)])
        lo = min(lo, float(ev[0]))
        hi = max(hi, float(ev[-1]))

    theta = model.theta
    truth = graph_from_precision(model)
    if truth.n_edges:
        rho = [-theta[i, j] / math.sqrt(theta[i, i] * theta[j, j]) for i, j in truth.edges]
        min_rho: Optional[float] = float(min(rho))
        c_rho = min_rho * math.sqrt(n ** 0.75 / math.log(p)) if p > 1 else None
    else:
        min_rho = None
        c_rho = None
    bound = n ** 0.125 + d_hat + 2
    return {
        "p": p,
        "n": n,
        "d_hat": d_hat,
        "subset_size": size,
        "subsets_checked": len(subsets),
        "exhaustive": exhaustive,
        "sigma_min": lo,
        "sigma_max": hi,
        "min_edge_partial_correlation": min_rho,
        "implied_c_rho": c_rho,
        "size_bound": bound,
        "size_condition": p >= bound,
        "max_degree": max(truth.degrees()),
    }
