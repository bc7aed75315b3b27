"""Undirected simple graphs on nodes ``0 .. p-1``."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable

import numpy as np

from .stats import DataError

GROUND_TRUTH_TOL = 1e-10


class Graph:
    """Undirected graph with canonical ``(i, j), i < j`` edges.

    Adjacency sets are kept in sync with the edge set; :meth:`remove_edge`
    is the only mutation.
    """

    __slots__ = ("p", "_adj")

    def __init__(self, p: int, edges: Iterable = ()):
        if p < 1:
            raise ValueError(f"p must be positive, got {p}")
        self.p = int(p)
        self._adj = [set() for _ in range(self.p)]
        for i, j in edges:
            self._add(int(i), int(j))

    def _add(self, i: int, j: int) -> None:
        if i == j:
            raise DataError(f"self-loop on node {i}")
        if not (0 <= i < self.p and 0 <= j < self.p):
            raise DataError(f"edge ({i}, {j}) out of range for p={self.p}")
        if j in self._adj[i]:
            raise DataError(f"duplicate edge ({min(i, j)}, {max(i, j)})")
        self._adj[i].add(j)
        self._adj[j].add(i)

    @property
    def edges(self) -> list:
        return [(i, j) for i in range(self.p) for j in sorted(self._adj[i]) if i < j]

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self._adj) // 2

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._adj[i]

    def adjacency(self, i: int) -> frozenset:
        return frozenset(self._adj[i])

    def neighbors(self, i: int) -> list:
        return sorted(self._adj[i])

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    def degrees(self) -> list:
        return [len(a) for a in self._adj]

    def remove_edge(self, i: int, j: int) -> None:
        if j not in self._adj[i]:
            raise KeyError((i, j))
        self._adj[i].discard(j)
        self._adj[j].discard(i)

    def copy(self) -> "Graph":
        return Graph(self.p, self.edges)

    def adjacency_matrix(self) -> np.ndarray:
        A = np.zeros((self.p, self.p), dtype=np.int64)
        for i, j in self.edges:
            A[i, j] = A[j, i] = 1
        return A

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.p == other.p and self._adj == other._adj

    def __repr__(self) -> str:
        return f"Graph(p={self.p}, edges={self.n_edges})"

    def to_text(self) -> str:
        lines = [f"# p={self.p}"] + [f"{i}\t{j}" for i, j in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "<string>") -> "Graph":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# p="):
            raise DataError(f"{source}: first line must be '# p=<count>'")
        try:
            p = int(lines[0][len("# p="):].strip())
        except ValueError:
            raise DataError(f"{source}:1: bad node count") from None
        if p < 1:
            raise DataError(f"{source}:1: node count must be positive")
        graph = cls(p)
        for lineno, line in enumerate(lines[1:], start=2):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise DataError(f"{source}:{lineno}: expected '<i>\\t<j>', got {line!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataError(f"{source}:{lineno}: non-integer node index") from None
            try:
                graph._add(i, j)
            except DataError as exc:
                raise DataError(f"{source}:{lineno}: {exc}") from None
        return graph


def complete_graph(p: int) -> Graph:
    if p < 2:
        raise ValueError(f"complete graph needs p >= 2, got {p}")
    return Graph(p, combinations(range(p), 2))


def graph_from_precision(model, tol: float = GROUND_TRUTH_TOL) -> Graph:
    """Support graph of the precision matrix: edge iff ``|theta_ij| > tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    theta = np.asarray(model.theta if hasattr(model, "theta") else model)
    p = theta.shape[0]
    return Graph(p, [(i, j) for i, j in combinations(range(p), 2) if abs(theta[i, j]) > tol])


def read_edge_list(path) -> Graph:
    return Graph.from_text(Path(path).read_text(encoding="utf-8"), str(path))


def write_edge_list(graph: Graph, path) -> None:
    Path(path).write_text(graph.to_text(), encoding="utf-8")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(estimated: Graph, truth: Graph) -> ConfusionCounts:
    if estimated.p != truth.p:
        raise DataError(f"graphs differ in size: {estimated.p} vs {truth.p}")
    est, tru = set(estimated.edges), set(truth.edges)
    tp = len(est & tru)
    fp = len(est - tru)
    fn = len(tru - est)
    total = truth.p * (truth.p - 1) // 2
    return ConfusionCounts(tp=tp, tn=total - tp - fp - fn, fp=fp, fn=fn)
