"""Dense small-matrix statistics: covariance, partial correlation, sampling."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .rng import philox

SINGULAR_TOL = 1e-12
SYMMETRY_TOL = 1e-12
# a partial correlation beyond 1 + CLAMP_SLACK is treated as a bug, not rounding
CLAMP_SLACK = 1e-8


class SingularMatrixError(ArithmeticError):
    """A Cholesky pivot fell below the relative singularity threshold."""

    def __init__(self, pivot: int, value: float, message: Optional[str] = None):
        self.pivot = pivot
        self.value = value
        super().__init__(message or f"matrix is numerically singular at pivot {pivot} (value {value:.3e})")


class DataError(ValueError):
    """Malformed or invalid input data."""


@dataclass(frozen=True)
class ObservationMatrix:
    """N x p sample matrix, one observation per row."""

    data: np.ndarray
    column_names: Optional[tuple] = None

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise DataError(f"observations must be a 2-d array, got shape {arr.shape}")
        n, p = arr.shape
        if n < 1 or p < 2:
            raise DataError(f"need at least 1 row and 2 columns, got {n}x{p}")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise DataError(f"non-finite value at row {bad[0]}, column {bad[1]}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        if self.column_names is not None:
            names = tuple(str(c) for c in self.column_names)
            if len(names) != p:
                raise DataError(f"{len(names)} column names for {p} columns")
            if len(set(names)) != p:
                raise DataError("column names must be unique")
            object.__setattr__(self, "column_names", names)

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]

    @classmethod
    def read_csv(cls, path) -> "ObservationMatrix":
        """Read comma-separated samples; a non-numeric first row is a header."""
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
        if not rows:
            raise DataError(f"{path}: no data")
        names = None
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            names = [c.strip() for c in rows[0]]
            rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: header but no data rows")
        width = len(names) if names is not None else len(rows[0])
        values = []
        for lineno, row in enumerate(rows, start=2 if names is not None else 1):
            if len(row) != width:
                raise DataError(f"{path}:{lineno}: ragged row ({len(row)} fields, expected {width})")
            try:
                values.append([float(c) for c in row])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
        return cls(np.array(values), names)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if self.column_names is not None:
                writer.writerow(self.column_names)
            for row in self.data:
                writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric covariance over an ordered list of node indices."""

    values: np.ndarray
    variables: tuple = field(default=None)

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DataError(f"covariance must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("covariance has non-finite entries")
        scale = max(np.max(np.abs(arr)), 1e-300)
        if np.max(np.abs(arr - arr.T)) > SYMMETRY_TOL * scale:
            raise DataError("covariance is not symmetric")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        variables = tuple(range(arr.shape[0])) if self.variables is None else tuple(int(v) for v in self.variables)
        if len(variables) != arr.shape[0] or len(set(variables)) != len(variables):
            raise DataError("variables must list each covered node exactly once")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "_index", {v: k for k, v in enumerate(variables)})

    def position(self, node: int) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise DataError(f"node {node} is not covered by this covariance") from None

    def submatrix(self, nodes: Sequence[int]) -> np.ndarray:
        pos = [self.position(v) for v in nodes]
        return self.values[np.ix_(pos, pos)]


@dataclass(frozen=True)
class PrecisionModel:
    """SPD precision matrix ``theta`` with its covariance ``sigma``."""

    theta: np.ndarray
    sigma: np.ndarray
    is_m_matrix: bool

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64, copy=True)
        sigma = np.array(self.sigma, dtype=np.float64, copy=True)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1] or sigma.shape != theta.shape:
            raise DataError("theta and sigma must be square matrices of equal shape")
        scale = max(np.max(np.abs(theta)), 1e-300)
        if np.max(np.abs(theta - theta.T)) > SYMMETRY_TOL * scale:
            raise DataError("theta is not symmetric")
        cholesky(theta)
        if np.max(np.abs(theta @ sigma - np.eye(theta.shape[0]))) > 1e-8:
            raise DataError("sigma is not the inverse of theta")
        if self.is_m_matrix:
            off = theta - np.diag(np.diag(theta))
            if np.max(off) > 1e-12:
                raise DataError("theta flagged as M-matrix has a positive off-diagonal entry")
        for arr in (theta, sigma):
            arr.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "is_m_matrix", bool(self.is_m_matrix))

    @property
    def p(self) -> int:
        return self.theta.shape[0]

    @classmethod
    def from_precision(cls, theta, is_m_matrix: Optional[bool] = None) -> "PrecisionModel":
        theta = np.asarray(theta, dtype=np.float64)
        theta = (theta + theta.T) / 2.0
        if is_m_matrix is None:
            off = theta - np.diag(np.diag(theta))
            is_m_matrix = bool(np.max(off, initial=0.0) <= 1e-12)
        return cls(theta, spd_inverse(theta), is_m_matrix)

    @classmethod
    def from_covariance(cls, sigma, is_m_matrix: Optional[bool] = None) -> "PrecisionModel":
        sigma = np.asarray(sigma, dtype=np.float64)
        theta = spd_inverse(sigma)
        if is_m_matrix is None:
            off = theta - np.diag(np.diag(theta))
            is_m_matrix = bool(np.max(off, initial=0.0) <= 1e-12)
        return cls(theta, sigma, is_m_matrix)


def _as_covariance(cov) -> CovarianceMatrix:
    return cov if isinstance(cov, CovarianceMatrix) else CovarianceMatrix(cov)


def cholesky(matrix: np.ndarray, tol: float = SINGULAR_TOL) -> np.ndarray:
    """Lower Cholesky factor with a relative pivot check.

    Raises :class:`SingularMatrixError` carrying the index of the first pivot
    below ``tol * max(diag)``.
    """
    a = np.asarray(matrix, dtype=np.float64)
    q = a.shape[0]
    threshold = tol * max(float(np.max(np.diag(a))), 0.0)
    L = np.zeros_like(a)
    for k in range(q):
        row = L[k, :k]
        pivot = a[k, k] - row @ row
        if not pivot > threshold or pivot <= 0.0:
            raise SingularMatrixError(k, float(pivot))
        L[k, k] = math.sqrt(pivot)
        if k + 1 < q:
            L[k + 1:, k] = (a[k + 1:, k] - L[k + 1:, :k] @ row) / L[k, k]
    return L


def spd_inverse(matrix, tol: float = SINGULAR_TOL) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix via Cholesky.

    Parameters
    ----------
    matrix : array_like, shape (q, q)
        Symmetric matrix.
    tol : float
        Relative pivot threshold; a pivot below ``tol * max(diag)`` is singular.

    Returns
    -------
    ndarray
        Symmetric inverse.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError(f"expected a square matrix, got shape {a.shape}")
    L = cholesky(a, tol)
    q = a.shape[0]
    Linv = np.zeros_like(L)
    eye = np.eye(q)
    # forward substitution, one row at a time
    for k in range(q):
        Linv[k] = (eye[k] - L[k, :k] @ Linv[:k]) / L[k, k]
    inv = Linv.T @ Linv
    return (inv + inv.T) / 2.0


def empirical_covariance(data, columns=None, rows=None, centered: bool = False) -> CovarianceMatrix:
    """Sample covariance ``(1/|rows|) sum x x^T`` over selected rows and columns.

    With ``centered`` the column means over the selected rows are removed
    first; the divisor stays ``|rows|``.
    """
    obs = data if isinstance(data, ObservationMatrix) else ObservationMatrix(data)
    x = obs.data
    if columns is None:
        columns = range(obs.n_cols)
    columns = [int(c) for c in columns]
    if len(set(columns)) != len(columns):
        raise DataError("duplicate column indices")
    if any(c < 0 or c >= obs.n_cols for c in columns):
        raise DataError("column index out of range")
    if rows is None:
        sub = x[:, columns]
    else:
        rows = np.asarray(rows, dtype=np.int64)
        if rows.size == 0:
            raise DataError("empty row set")
        if rows.min() < 0 or rows.max() >= obs.n_rows:
            raise DataError("row index out of range")
        sub = x[np.ix_(rows, columns)]
    m = sub.shape[0]
    if centered:
        if m < 2:
            raise DataError("centered covariance needs at least 2 rows")
        sub = sub - sub.mean(axis=0)
    cov = sub.T @ sub / m
    return CovarianceMatrix((cov + cov.T) / 2.0, tuple(columns))


def clamp_correlation(value: float) -> float:
    if abs(value) > 1.0 + CLAMP_SLACK or math.isnan(value):
        raise ArithmeticError(f"partial correlation {value!r} outside [-1, 1]")
    return min(1.0, max(-1.0, value))


def partial_correlation(cov, i: int, j: int, s=(), tol: float = SINGULAR_TOL) -> float:
    """Partial correlation of nodes ``i`` and ``j`` given the node set ``s``.

    Inverts the covariance submatrix on ``s + {i, j}`` and returns
    ``-K_ij / sqrt(K_ii K_jj)``.
    """
    cov = _as_covariance(cov)
    s = [int(v) for v in s]
    if i == j:
        raise DataError("i and j must differ")
    if i in s or j in s:
        raise DataError("conditioning set must exclude i and j")
    if len(set(s)) != len(s):
        raise DataError("duplicate nodes in conditioning set")
    # fixed pair order makes the result exactly symmetric in (i, j)
    nodes = [min(i, j), max(i, j)] + sorted(s)
    K = spd_inverse(cov.submatrix(nodes), tol)
    return clamp_correlation(-K[0, 1] / math.sqrt(K[0, 0] * K[1, 1]))


def sample_gaussian(model, n: int, seed: int) -> ObservationMatrix:
    """Draw ``n`` i.i.d. rows from ``N(0, model.sigma)``.

    Standard normals come from numpy's Philox generator keyed by ``seed``
    and are mapped through the lower Cholesky factor of ``sigma``.
    """
    if n < 1:
        raise DataError("n must be at least 1")
    L = cholesky(model.sigma)
    z = philox(seed).standard_normal((n, L.shape[0]))
    return ObservationMatrix(z @ L.T)


def read_matrix_csv(path) -> tuple:
    """Read a dense square matrix written by :func:`write_matrix_csv`.

    Returns ``(matrix, header_fields)``.
    """
    header = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if "=" in token:
                        k, v = token.split("=", 1)
                        header[k] = v
                continue
            rows.append([float(c) for c in line.split(",")])
    arr = np.array(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DataError(f"{path}: matrix is not square")
    return arr, header


def write_matrix_csv(matrix, path, **header) -> None:
    arr = np.asarray(matrix, dtype=np.float64)
    fields = " ".join([f"p={arr.shape[0]}"] + [f"{k}={v}" for k, v in header.items()])
    lines = [f"# {fields}"]
    lines += [",".join(repr(float(v)) for v in row) for row in arr]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
