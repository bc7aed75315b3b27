"""Sign-based structure learning on random batches.

Starting from the complete graph, level ``l = 0, 1, ...`` visits every
ordered adjacent pair ``(i, j)`` with ``|adj(i) \\ {j}| >= l``. For every
``S`` of size ``l`` drawn from those neighbours and every witness ``k``
outside ``S + {i, j}``, the partial correlation of ``i`` and ``j`` given
``S + {k}`` is estimated on a fresh batch of ``floor(N**gamma)`` rows. The
edge is removed as soon as one estimate is strictly negative.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from . import kernels
from .graph import Graph, complete_graph
from .rng import check_seed, stream_key
from .stats import SINGULAR_TOL, DataError, ObservationMatrix, SingularMatrixError

DEFAULT_GAMMA = 7.0 / 9.0
GAMMA_RANGE = (0.75, 1.0)
UNSAFE_GAMMA_RANGE = (0.0, 1.0)


class ConfigError(ValueError):
    pass


class BatchTooSmallError(ValueError):
    """The batch cannot support the covariance dimension of a test."""

    def __init__(self, m: int, level: int, needed: int):
        self.m = m
        self.level = level
        self.needed = needed
        super().__init__(f"batch size {m} too small at level {level}: need at least {needed} rows")


@dataclass(frozen=True)
class LearnerConfig:
    gamma: float = DEFAULT_GAMMA
    seed: int = 0
    max_level: Optional[int] = None
    centered: bool = False
    singular_policy: str = "skip"
    unsafe_gamma: bool = False

    def __post_init__(self):
        lo, hi = UNSAFE_GAMMA_RANGE if self.unsafe_gamma else GAMMA_RANGE
        if not (isinstance(self.gamma, (int, float)) and lo < self.gamma < hi):
            hint = "" if self.unsafe_gamma else " (use unsafe_gamma to widen to (0, 1))"
            raise ConfigError(f"gamma must lie strictly inside ({lo}, {hi}), got {self.gamma}{hint}")
        try:
            check_seed(self.seed)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if self.max_level is not None and self.max_level < 0:
            raise ConfigError("max_level must be nonnegative")
        if self.singular_policy not in ("skip", "error"):
            raise ConfigError(f"singular_policy must be 'skip' or 'error', got {self.singular_policy!r}")


@dataclass
class LearnRecord:
    tests_run: int = 0
    edges_deleted_per_level: list = field(default_factory=list)
    singular_skips: int = 0
    final_level: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BatchDraw:
    indices: np.ndarray
    m: int


def batch_size(n: int, gamma: float) -> int:
    """``floor(n ** gamma)``, robust to ``1024 ** 0.8 == 256.00000000000006``-style rounding."""
    exact = float(n) ** gamma
    m = math.floor(exact)
    if (m + 1) - exact < 1e-9 * exact:
        m += 1
    return min(m, n)


def draw_batch(n: int, gamma: float, seed: int, position: int, dim: Optional[int] = None) -> BatchDraw:
    """Uniform batch of ``floor(n**gamma)`` distinct rows for stream ``position``.

    ``dim`` is the number of variables the batch must support; the batch
    needs at least ``dim + 1`` rows.
    """
    m = batch_size(n, gamma)
    if m < 2:
        raise BatchTooSmallError(m, -1, 2)
    if dim is not None and m < dim + 1:
        raise BatchTooSmallError(m, dim - 3, dim + 1)
    rows = kernels.draw_rows(stream_key(seed), int(position), int(n), int(m))
    return BatchDraw(rows, m)


def ci_test(data, rows, i: int, j: int, cond=(), centered: bool = False, tol: float = SINGULAR_TOL) -> float:
    """Estimated partial correlation of ``i`` and ``j`` given ``cond`` on a batch."""
    x = data.data if isinstance(data, ObservationMatrix) else np.ascontiguousarray(data, dtype=np.float64)
    idx = rows.indices if isinstance(rows, BatchDraw) else np.asarray(rows, dtype=np.int64)
    cond = [int(c) for c in cond]
    if i == j or i in cond or j in cond:
        raise DataError("i, j and cond must be disjoint")
    if len(cond) + 2 > len(idx) - 1:
        raise BatchTooSmallError(len(idx), len(cond), len(cond) + 3)
    cols = np.array(cond + [i, j], dtype=np.int64)
    status, rho = kernels.batch_pcorr(x, idx, cols, centered, tol)
    if status != kernels.OK:
        raise SingularMatrixError(-1, float("nan"), f"singular batch covariance for ({i}, {j} | {cond})")
    return rho


def learn_structure(data, config: LearnerConfig = LearnerConfig(), backend=None):
    """Estimate the graph; returns ``(Graph, LearnRecord)``.

    ``backend`` overrides the kernel module (``"python"`` or ``"cython"``).
    """
    obs = data if isinstance(data, ObservationMatrix) else ObservationMatrix(data)
    impl = kernels if backend is None else kernels.get_backend(backend)
    x = obs.data
    n, p = x.shape
    if n < 2:
        raise DataError("need at least 2 observations")
    m = batch_size(n, config.gamma)
    key = stream_key(config.seed)
    skip = config.singular_policy == "skip"
    work = np.arange(n, dtype=np.int64)
    nodes = np.arange(p, dtype=np.int64)

    graph = complete_graph(p)
    record = LearnRecord()
    position = 0
    level = 0
    while config.max_level is None or level <= config.max_level:
        if not any(d - 1 >= level for d in graph.degrees()):
            break
        if p - 3 >= level and m < level + 4:
            raise BatchTooSmallError(m, level, level + 4)
        deleted = 0
        for i in range(p):
            for j in range(p):
                if i == j or not graph.has_edge(i, j):
                    continue
                others = [v for v in graph.neighbors(i) if v != j]
                if len(others) < level:
                    continue
                for cond in combinations(others, level):
                    mask = np.ones(p, dtype=bool)
                    mask[list(cond)] = False
                    mask[i] = mask[j] = False
                    witnesses = nodes[mask]
                    if witnesses.size == 0:
                        continue
                    removed, tests, skips, failed = impl.test_pair(
                        x, i, j, np.array(cond, dtype=np.int64), witnesses, key, position, m,
                        config.centered, SINGULAR_TOL, skip, work,
                    )
                    position += tests
                    record.tests_run += tests
                    record.singular_skips += skips
                    if failed:
                        raise SingularMatrixError(
                            -1, float("nan"),
                            f"singular batch covariance at level {level}, pair ({i}, {j}), "
                            f"conditioning set {list(cond)}, test {position - 1}",
                        )
                    if removed:
                        graph.remove_edge(i, j)
                        deleted += 1
                        break
        record.edges_deleted_per_level.append(deleted)
        level += 1
    record.final_level = level
    return graph, record
