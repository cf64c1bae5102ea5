# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled matrix kernels for small dense matrices.

Same contract as ``foliate._pykernels``; the loops are written out so the
per-call cost at n <= 10 is not dominated by numpy dispatch.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, fabs, log2, pow

cnp.import_array()

cdef enum:
    PADE_DEGREE = 8

cdef double SCALED_NORM_MAX = 0.5

cdef double PADE[PADE_DEGREE + 1]
cdef double DEXPINV[6]


cdef void _init_coeffs():
    cdef int k
    cdef double c = 1.0
    # c_0 = 1, c_k = c_{k-1} (q - k + 1) / (k (2q - k + 1))
    PADE[0] = 1.0
    for k in range(1, PADE_DEGREE + 1):
        c = c * (PADE_DEGREE - k + 1) / (k * (2.0 * PADE_DEGREE - k + 1))
        PADE[k] = c
    DEXPINV[0] = 1.0
    DEXPINV[1] = -0.5
    DEXPINV[2] = 1.0 / 12.0
    DEXPINV[3] = 0.0
    DEXPINV[4] = -1.0 / 720.0
    DEXPINV[5] = 0.0


_init_coeffs()


cdef inline void _matmul(double[:, ::1] A, double[:, ::1] B, double[:, ::1] out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(n):
                s += A[i, k] * B[k, j]
            out[i, j] = s


cdef int _solve_inplace(double[:, ::1] A, double[:, ::1] B, Py_ssize_t n) noexcept nogil:
    """Overwrite B with A^{-1} B by partial-pivot elimination; A is destroyed."""
    cdef Py_ssize_t i, j, k, p
    cdef double big, tmp, f
    for k in range(n):
        p = k
        big = fabs(A[k, k])
        for i in range(k + 1, n):
            if fabs(A[i, k]) > big:
                big = fabs(A[i, k])
                p = i
        if big == 0.0:
            return -1
        if p != k:
            for j in range(n):
                tmp = A[k, j]; A[k, j] = A[p, j]; A[p, j] = tmp
                tmp = B[k, j]; B[k, j] = B[p, j]; B[p, j] = tmp
        for i in range(k + 1, n):
            f = A[i, k] / A[k, k]
            if f != 0.0:
                for j in range(k, n):
                    A[i, j] -= f * A[k, j]
                for j in range(n):
                    B[i, j] -= f * B[k, j]
    for k in range(n - 1, -1, -1):
        for j in range(n):
            tmp = B[k, j]
            for i in range(k + 1, n):
                tmp -= A[k, i] * B[i, j]
            B[k, j] = tmp / A[k, k]
    return 0


def expm(X):
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double norm = 0.0, col, scale, sign
    cdef int squarings = 0

    for j in range(n):
        col = 0.0
        for i in range(n):
            col += fabs(x[i, j])
        if col > norm:
            norm = col
    if norm > SCALED_NORM_MAX:
        squarings = <int>ceil(log2(norm / SCALED_NORM_MAX))
    scale = pow(2.0, -squarings)

    a_arr = np.empty((n, n))
    p_arr = np.eye(n)
    t_arr = np.empty((n, n))
    num_arr = np.zeros((n, n))
    den_arr = np.zeros((n, n))
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] pw = p_arr
    cdef double[:, ::1] tmp = t_arr
    cdef double[:, ::1] num = num_arr
    cdef double[:, ::1] den = den_arr

    with nogil:
        for i in range(n):
            for j in range(n):
                a[i, j] = x[i, j] * scale
            num[i, i] = PADE[0]
            den[i, i] = PADE[0]
        sign = 1.0
        for k in range(1, PADE_DEGREE + 1):
            _matmul(pw, a, tmp, n)
            pw[:, :] = tmp
            sign = -sign
            for i in range(n):
                for j in range(n):
                    num[i, j] += PADE[k] * pw[i, j]
                    den[i, j] += sign * PADE[k] * pw[i, j]
        if _solve_inplace(den, num, n) != 0:
            with gil:
                raise np.linalg.LinAlgError("singular Pade denominator")
        for k in range(squarings):
            _matmul(num, num, tmp, n)
            num[:, :] = tmp
    return num_arr


def commutator(A, B):
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(B, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s
    out_arr = np.empty((n, n))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(n):
            for j in range(n):
                s = 0.0
                for k in range(n):
                    s += a[i, k] * b[k, j] - b[i, k] * a[k, j]
                out[i, j] = s
    return out_arr


def dexpinv(X, Y, int order):
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] y = np.ascontiguousarray(Y, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j, k
    cdef int grade, top = order - 1
    cdef double s, c
    while top > 0 and DEXPINV[top] == 0.0:
        top -= 1

    out_arr = np.array(Y, dtype=np.float64, copy=True, order="C")
    term_arr = np.array(Y, dtype=np.float64, copy=True, order="C")
    next_arr = np.empty((n, n))
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] term = term_arr
    cdef double[:, ::1] nxt = next_arr
    with nogil:
        for grade in range(1, top + 1):
            for i in range(n):
                for j in range(n):
                    s = 0.0
                    for k in range(n):
                        s += x[i, k] * term[k, j] - term[i, k] * x[k, j]
                    nxt[i, j] = s
            term[:, :] = nxt
            c = DEXPINV[grade]
            if c != 0.0:
                for i in range(n):
                    for j in range(n):
                        out[i, j] += c * term[i, j]
    return out_arr
