"""The compiled and pure-Python kernels must agree call for call."""
import numpy as np
import pytest

from tpgraph import kernels
from tpgraph.rng import stream_key
from tpgraph.stats import partial_correlation, empirical_covariance

from conftest import BACKENDS

needs_ext = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")


def test_env_selection_reports_backend():
    assert kernels.BACKEND in ("python", "cython")
    assert kernels.get_backend("python").__name__.endswith("_pykernels")
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@pytest.mark.parametrize("n,m", [(10, 6), (1024, 256), (50, 50), (100000, 7742)])
def test_draw_rows_distinct_in_range(backend, n, m):
    rows = kernels.get_backend(backend).draw_rows(stream_key(9), 3, n, m)
    assert rows.shape == (m,)
    assert len(set(rows.tolist())) == m
    assert rows.min() >= 0 and rows.max() < n


def test_draw_rows_uniform_marginals(backend):
    impl = kernels.get_backend(backend)
    key = stream_key(1)
    counts = np.zeros(20)
    for t in range(4000):
        counts[impl.draw_rows(key, t, 20, 5)] += 1
    # each row is included with probability 1/4; 1000 expected, sd ~27
    assert np.all(np.abs(counts - 1000) < 150)


@needs_ext
def test_draw_rows_identical_across_backends():
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    key = stream_key(123)
    work = np.arange(5000, dtype=np.int64)
    for t in range(50):
        a = py.draw_rows(key, t, 5000, 300)
        b = cy.draw_rows(key, t, 5000, 300, work)
        np.testing.assert_array_equal(a, b)
    # the work array is restored after each draw
    np.testing.assert_array_equal(work, np.arange(5000))


def test_batch_pcorr_matches_stat_core(backend, rng):
    impl = kernels.get_backend(backend)
    x = rng.standard_normal((200, 6)) @ rng.standard_normal((6, 6))
    rows = np.arange(0, 200, 3, dtype=np.int64)
    cols = np.array([4, 0, 2, 5], dtype=np.int64)
    for centered in (False, True):
        status, rho = impl.batch_pcorr(x, rows, cols, centered, 1e-12)
        cov = empirical_covariance(x, rows=rows, centered=centered)
        assert status == kernels.OK
        assert rho == pytest.approx(partial_correlation(cov, 2, 5, [4, 0]), abs=1e-12)


def test_batch_pcorr_singular(backend):
    impl = kernels.get_backend(backend)
    x = np.ones((10, 3))
    status, _ = impl.batch_pcorr(x, np.arange(10, dtype=np.int64), np.array([0, 1, 2], dtype=np.int64), False, 1e-12)
    assert status == kernels.SINGULAR


@needs_ext
def test_test_pair_identical_across_backends(rng):
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    x = rng.standard_normal((3000, 7))
    key = stream_key(5)
    for position in range(0, 40, 7):
        args = (x, 1, 4, np.array([0, 2], dtype=np.int64), np.array([3, 5, 6], dtype=np.int64),
                key, position, 500, False, 1e-12, True)
        assert py.test_pair(*args) == cy.test_pair(*args, np.arange(3000, dtype=np.int64))


def test_test_pair_error_policy(backend):
    impl = kernels.get_backend(backend)
    x = np.zeros((50, 4))
    out = impl.test_pair(x, 0, 1, np.array([], dtype=np.int64), np.array([2, 3], dtype=np.int64),
                         stream_key(0), 0, 20, False, 1e-12, False)
    assert out == (False, 1, 0, True)
    out = impl.test_pair(x, 0, 1, np.array([], dtype=np.int64), np.array([2, 3], dtype=np.int64),
                         stream_key(0), 0, 20, False, 1e-12, True)
    assert out == (False, 2, 2, False)
