# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels of the interior-point solver.

Same contracts as ``_numpy_impl``.  All heavy products go through BLAS
(row-major handled via the transpose identity), so the compiled path keeps
BLAS throughput on large blocks while avoiding per-call numpy overhead on
the small ones this solver mostly sees.
"""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm, dgemv

cnp.import_array()


cdef void _matmul(double* a, double* b, double* c, int n) noexcept nogil:
    # row-major C = A @ B via column-major C^T = B^T A^T
    cdef double one = 1.0, zero = 0.0
    cdef char nt = b'N'
    dgemm(&nt, &nt, &n, &n, &n, &one, b, &n, a, &n, &zero, c, &n)


def gram_conjugated(double[:, :, ::1] a, double[:, ::1] w):
    """Gram matrix G[k, l] = <A_k, W A_l W> for a stack of symmetric A_k."""
    cdef int m = <int> a.shape[0]
    cdef int n = <int> a.shape[1]
    cdef int k2 = n * n
    cdef cnp.ndarray[cnp.float64_t, ndim=3] t_arr = np.empty((m, n, n))
    cdef double[:, :, ::1] t = t_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=2] g_arr = np.empty((m, m))
    cdef double[:, ::1] g = g_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=2] tmp_arr = np.empty((n, n))
    cdef double[:, ::1] tmp = tmp_arr
    cdef Py_ssize_t k
    cdef double one = 1.0, zero = 0.0
    cdef char tr = b'T', nt = b'N'

    with nogil:
        for k in range(m):
            _matmul(&w[0, 0], &a[k, 0, 0], &tmp[0, 0], n)
            _matmul(&tmp[0, 0], &w[0, 0], &t[k, 0, 0], n)
        # G = Aflat @ Tflat^T, symmetric, via one col-major dgemm
        dgemm(&tr, &nt, &m, &m, &k2, &one, &a[0, 0, 0], &k2,
              &t[0, 0, 0], &k2, &zero, &g[0, 0], &m)
    return g_arr


def weighted_sum(double[:, :, ::1] a, double[::1] y):
    """sum_k y[k] * A_k over a stack of matrices."""
    cdef int m = <int> a.shape[0]
    cdef int n = <int> a.shape[1]
    cdef int k2 = n * n
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.empty((n, n))
    cdef double[:, ::1] out = out_arr
    cdef double one = 1.0, zero = 0.0
    cdef char nt = b'N'
    cdef int inc = 1
    with nogil:
        dgemv(&nt, &k2, &m, &one, &a[0, 0, 0], &k2, &y[0], &inc,
              &zero, &out[0, 0], &inc)
    return out_arr


def inner_products(double[:, :, ::1] a, double[:, ::1] x):
    """Vector of Frobenius inner products <A_k, X>."""
    cdef int m = <int> a.shape[0]
    cdef int n = <int> a.shape[1]
    cdef int k2 = n * n
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    cdef double one = 1.0, zero = 0.0
    cdef char tr = b'T'
    cdef int inc = 1
    with nogil:
        dgemv(&tr, &k2, &m, &one, &a[0, 0, 0], &k2, &x[0, 0], &inc,
              &zero, &out[0], &inc)
    return out_arr
