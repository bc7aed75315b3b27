# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner kernels: batch draws and batched partial-correlation sign tests.

Must agree call for call with ``_pykernels``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    MAXQ = 64

cdef uint64_t PHI = 0x9E3779B97F4A7C15ULL
cdef uint64_t M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t M2 = 0x94D049BB133111EBULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0

OK = 0
SINGULAR = 1


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef void _draw(uint64_t key, uint64_t position, int64_t n, int64_t m,
                int64_t* work, int64_t* out, int64_t* picks) noexcept nogil:
    # partial Fisher-Yates on the identity permutation in ``work``, then undone
    cdef uint64_t origin = mix64(key + position * PHI)
    cdef uint64_t w
    cdef int64_t s, r, span, tmp
    cdef double u
    for s in range(m):
        w = mix64(origin + <uint64_t>(s + 1) * PHI)
        u = <double>(w >> 11) * TWO_M53
        span = n - s
        r = <int64_t>(u * <double>span)
        if r > span - 1:
            r = span - 1
        r += s
        picks[s] = r
        tmp = work[s]
        work[s] = work[r]
        work[r] = tmp
        out[s] = work[s]
    for s in range(m - 1, -1, -1):
        r = picks[s]
        tmp = work[s]
        work[s] = work[r]
        work[r] = tmp


cdef int _pcorr(const double[:, ::1] data, const int64_t* rows, int64_t m,
                const int64_t* cols, int q, bint centered, double tol,
                double* cov, double* mean, double* rho) noexcept nogil:
    cdef int a, b, k
    cdef int64_t t
    cdef const double* x
    cdef double s, pivot, maxdiag, lb, lc, r
    for a in range(q * q):
        cov[a] = 0.0
    for a in range(q):
        mean[a] = 0.0
    if centered:
        for t in range(m):
            x = &data[rows[t], 0]
            for a in range(q):
                mean[a] += x[cols[a]]
        for a in range(q):
            mean[a] /= m
    for t in range(m):
        x = &data[rows[t], 0]
        for a in range(q):
            s = x[cols[a]] - mean[a]
            for b in range(a + 1):
                cov[a * q + b] += s * (x[cols[b]] - mean[b])
    maxdiag = 0.0
    for a in range(q):
        for b in range(a + 1):
            cov[a * q + b] /= m
        if cov[a * q + a] > maxdiag:
            maxdiag = cov[a * q + a]
    # in-place lower Cholesky
    for k in range(q):
        pivot = cov[k * q + k]
        for b in range(k):
            pivot -= cov[k * q + b] * cov[k * q + b]
        if k == q - 1:
            # last pivot may vanish (j collinear with S and i): rho is then +-1,
            # defined as long as j keeps residual variance given S
            lb = cov[k * q + k - 1]
            if pivot <= tol * maxdiag:
                pivot = 0.0
            if not (lb * lb + pivot > tol * maxdiag):
                return 1
            cov[k * q + k] = sqrt(pivot)
            break
        if not (pivot > tol * maxdiag) or pivot <= 0.0:
            return 1
        pivot = sqrt(pivot)
        cov[k * q + k] = pivot
        for a in range(k + 1, q):
            s = cov[a * q + k]
            for b in range(k):
                s -= cov[a * q + b] * cov[k * q + b]
            cov[a * q + k] = s / pivot
    lb = cov[(q - 1) * q + q - 2]
    lc = cov[(q - 1) * q + q - 1]
    r = lb / sqrt(lb * lb + lc * lc)
    if r > 1.0:
        r = 1.0
    elif r < -1.0:
        r = -1.0
    rho[0] = r
    return 0


def draw_rows(key, position, n, m, work=None):
    cdef int64_t nn = n, mm = m
    if work is None:
        work = np.arange(nn, dtype=np.int64)
    cdef int64_t[::1] w = work
    out = np.empty(mm, dtype=np.int64)
    cdef int64_t[::1] o = out
    picks = np.empty(mm, dtype=np.int64)
    cdef int64_t[::1] pk = picks
    cdef uint64_t ukey = <uint64_t>key
    cdef uint64_t upos = <uint64_t>position
    if mm == 0:
        return out
    with nogil:
        _draw(ukey, upos, nn, mm, &w[0], &o[0], &pk[0])
    return out


def batch_pcorr(data, rows, cols, centered, tol):
    cdef const double[:, ::1] d = np.ascontiguousarray(data, dtype=np.float64)
    cdef int64_t[::1] r = np.ascontiguousarray(rows, dtype=np.int64)
    cdef int64_t[::1] c = np.ascontiguousarray(cols, dtype=np.int64)
    cdef int q = c.shape[0]
    cdef double cov[MAXQ * MAXQ]
    cdef double mean[MAXQ]
    cdef double rho = 0.0
    cdef int status
    if q > MAXQ:
        raise ValueError(f"at most {MAXQ} variables per test")
    status = _pcorr(d, &r[0], r.shape[0], &c[0], q, centered, tol, cov, mean, &rho)
    return status, rho


def test_pair(data, int64_t i, int64_t j, cond, witnesses, key, position, int64_t m,
              bint centered, double tol, bint skip_singular, work=None):
    cdef const double[:, ::1] d = data
    cdef int64_t n = d.shape[0]
    cdef int64_t[::1] cnd = np.ascontiguousarray(cond, dtype=np.int64)
    cdef int64_t[::1] wit = np.ascontiguousarray(witnesses, dtype=np.int64)
    cdef int ell = cnd.shape[0]
    cdef int q = ell + 3
    if q > MAXQ:
        raise ValueError(f"at most {MAXQ} variables per test")
    if work is None:
        work = np.arange(n, dtype=np.int64)
    cdef int64_t[::1] wk = work
    cdef uint64_t ukey = <uint64_t>key
    cdef uint64_t upos = <uint64_t>position
    cdef int64_t cols[MAXQ]
    cdef double cov[MAXQ * MAXQ]
    cdef double mean[MAXQ]
    cdef double rho = 0.0
    cdef int64_t* rows = <int64_t*>malloc(m * sizeof(int64_t))
    cdef int64_t* picks = <int64_t*>malloc(m * sizeof(int64_t))
    cdef int64_t t, tests = 0, skips = 0
    cdef int a, status
    cdef bint deleted = False, failed = False
    if rows == NULL or picks == NULL:
        free(rows)
        free(picks)
        raise MemoryError()
    for a in range(ell):
        cols[a] = cnd[a]
    cols[q - 2] = i
    cols[q - 1] = j
    with nogil:
        for t in range(wit.shape[0]):
            cols[ell] = wit[t]
            _draw(ukey, upos + <uint64_t>tests, n, m, &wk[0], rows, picks)
            tests += 1
            status = _pcorr(d, rows, m, cols, q, centered, tol, cov, mean, &rho)
            if status != 0:
                if not skip_singular:
                    failed = True
                    break
                skips += 1
                continue
            if rho < 0.0:
                deleted = True
                break
    free(rows)
    free(picks)
    return deleted, tests, skips, failed
