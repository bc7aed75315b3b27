"""Edge-recovery scores, gamma sweeps and sector modularity."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .graph import ConfusionCounts, Graph, confusion
from .learner import LearnerConfig, learn_structure
from .rng import derive_seed

SWEEP_COLUMNS = (
    "gamma", "n", "p", "tp", "tn", "fp", "fn", "mcc", "tpr", "fpr",
    "tests_run", "singular_skips", "wall_ms",
)


class ModularityUndefined(ArithmeticError):
    pass


class SweepError(RuntimeError):
    def __init__(self, gamma: float, cause: Exception):
        self.gamma = gamma
        super().__init__(f"gamma={gamma!r}: {cause}")


@dataclass(frozen=True)
class MetricsReport:
    """Scores for one estimate; ``None`` marks an undefined ratio."""

    counts: ConfusionCounts
    mcc: Optional[float]
    tpr: Optional[float]
    fpr: Optional[float]

    @classmethod
    def from_counts(cls, counts: ConfusionCounts) -> "MetricsReport":
        tpr, fpr = tpr_fpr(counts)
        return cls(counts, mcc(counts), tpr, fpr)

    @classmethod
    def compare(cls, estimated: Graph, truth: Graph) -> "MetricsReport":
        return cls.from_counts(confusion(estimated, truth))

    def to_dict(self) -> dict:
        c = self.counts
        return {"tp": c.tp, "tn": c.tn, "fp": c.fp, "fn": c.fn,
                "mcc": self.mcc, "tpr": self.tpr, "fpr": self.fpr}


def mcc(counts: ConfusionCounts) -> Optional[float]:
    """Matthews correlation coefficient, or ``None`` when a marginal is empty."""
    tp, tn, fp, fn = counts.tp, counts.tn, counts.fp, counts.fn
    factors = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if factors == 0:
        return None
    # integer numerator and product keep small cases exact
    return (tp * tn - fp * fn) / math.sqrt(factors)


def tpr_fpr(counts: ConfusionCounts) -> tuple:
    tpr = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else None
    fpr = counts.fp / (counts.fp + counts.tn) if counts.fp + counts.tn else None
    return tpr, fpr


def modularity(graph: Graph, sectors: Sequence) -> float:
    """Newman modularity of ``graph`` for the node partition ``sectors``.

    The double sum runs over all ordered pairs including ``i == j``, so it
    reduces to ``sum_c [e_c / m - (K_c / 2m)^2]`` with ``e_c`` the edges
    inside sector ``c`` and ``K_c`` its degree total.
    """
    labels = list(sectors)
    if len(labels) != graph.p:
        raise ValueError(f"{len(labels)} sector labels for {graph.p} nodes")
    m = graph.n_edges
    if m == 0:
        raise ModularityUndefined("modularity undefined for a graph without edges")
    inside: dict = {}
    degree: dict = {}
    for node, d in enumerate(graph.degrees()):
        degree[labels[node]] = degree.get(labels[node], 0) + d
    for i, j in graph.edges:
        if labels[i] == labels[j]:
            inside[labels[i]] = inside.get(labels[i], 0) + 1
    two_m = 2 * m
    return sum(2 * inside.get(c, 0) / two_m - (k / two_m) ** 2 for c, k in degree.items())


def sector_statistics(graph: Graph, sectors: Sequence) -> list:
    labels = list(sectors)
    stats: dict = {}
    for node, label in enumerate(labels):
        entry = stats.setdefault(label, {"sector": label, "nodes": 0, "internal_edges": 0, "degree_sum": 0})
        entry["nodes"] += 1
        entry["degree_sum"] += graph.degree(node)
    for i, j in graph.edges:
        if labels[i] == labels[j]:
            stats[labels[i]]["internal_edges"] += 1
    return [stats[k] for k in sorted(stats, key=str)]


def _sweep_row(data, gamma, seed, truth, centered, max_level, unsafe_gamma, backend):
    start = time.perf_counter()
    try:
        config = LearnerConfig(gamma=gamma, seed=derive_seed(seed, "gamma", float(gamma)),
                               max_level=max_level, centered=centered, unsafe_gamma=unsafe_gamma)
        estimate, record = learn_structure(data, config, backend=backend)
    except Exception as exc:
        raise SweepError(gamma, exc) from exc
    wall_ms = (time.perf_counter() - start) * 1000.0
    n, p = data.data.shape if hasattr(data, "data") else data.shape
    row = {"gamma": gamma, "n": n, "p": p, "tp": None, "tn": None, "fp": None, "fn": None,
           "mcc": None, "tpr": None, "fpr": None, "tests_run": record.tests_run,
           "singular_skips": record.singular_skips, "wall_ms": wall_ms}
    if truth is not None:
        row.update(MetricsReport.compare(estimate, truth).to_dict())
    row["graph"] = estimate
    return row


def gamma_sweep(data, gammas, seed: int, truth: Optional[Graph] = None, centered: bool = False,
                max_level: Optional[int] = None, unsafe_gamma: bool = False,
                parallelism: Optional[int] = None, backend=None) -> list:
    """One learner run per gamma, rows in input order.

    Each gamma gets the seed ``derive_seed(seed, "gamma", gamma)``, so
    repeated gammas give identical rows. Metric fields stay ``None`` without
    ``truth``. The estimated graph is returned under ``"graph"``.
    """
    args = [(data, float(g), seed, truth, centered, max_level, unsafe_gamma, backend) for g in gammas]
    if parallelism and parallelism > 1:
        # the compiled kernel releases the GIL, so threads overlap
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(lambda a: _sweep_row(*a), args))
    return [_sweep_row(*a) for a in args]


def roc_points(rows: Sequence[dict]) -> list:
    """``(fpr, tpr, gamma)`` points sorted by FPR, skipping undefined rates."""
    pts = [(r["fpr"], r["tpr"], r["gamma"]) for r in rows if r["fpr"] is not None and r["tpr"] is not None]
    return sorted(pts)
