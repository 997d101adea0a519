# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: quasi-triangular Sylvester solve and 1x1 Schur swaps.

Mirrors ``_pykernels`` exactly; selected at import by ``sml.linalg._backend``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, hypot
from cpython.mem cimport PyMem_Malloc, PyMem_Free

from ..errors import SingularSylvesterError

cnp.import_array()

BACKEND = "cython"


def block_starts(T):
    cdef double[:, :] t = np.asarray(T, dtype=np.float64)
    cdef Py_ssize_t k = t.shape[0], i = 0
    starts = []
    while i < k:
        starts.append(i)
        if i + 1 < k and t[i + 1, i] != 0.0:
            i += 2
        else:
            i += 1
    return starts


cdef Py_ssize_t _starts(double[:, :] M, Py_ssize_t* out) noexcept nogil:
    cdef Py_ssize_t k = M.shape[0], i = 0, nb = 0
    while i < k:
        out[nb] = i
        nb += 1
        if i + 1 < k and M[i + 1, i] != 0.0:
            i += 2
        else:
            i += 1
    out[nb] = k
    return nb


cdef void _eigs(double[:, :] M, Py_ssize_t i0, Py_ssize_t sz,
                double* re, double* im) noexcept nogil:
    cdef double a, b, c, d, htr, disc, r
    if sz == 1:
        re[0] = M[i0, i0]
        im[0] = 0.0
        return
    a = M[i0, i0]
    b = M[i0, i0 + 1]
    c = M[i0 + 1, i0]
    d = M[i0 + 1, i0 + 1]
    htr = 0.5 * (a + d)
    disc = (0.5 * (a - d)) * (0.5 * (a - d)) + b * c
    if disc >= 0:
        r = sqrt(disc)
        re[0] = htr + r
        re[1] = htr - r
        im[0] = 0.0
        im[1] = 0.0
    else:
        r = sqrt(-disc)
        re[0] = htr
        re[1] = htr
        im[0] = r
        im[1] = -r


cdef int _solve_small(double* K, double* rhs, Py_ssize_t n) noexcept nogil:
    """Gaussian elimination with partial pivoting on an n x n row-major system."""
    cdef Py_ssize_t i, j, r, piv
    cdef double best, tmp, fac
    for i in range(n):
        piv = i
        best = fabs(K[i * n + i])
        for r in range(i + 1, n):
            if fabs(K[r * n + i]) > best:
                best = fabs(K[r * n + i])
                piv = r
        if best == 0.0:
            return 1
        if piv != i:
            for j in range(n):
                tmp = K[i * n + j]
                K[i * n + j] = K[piv * n + j]
                K[piv * n + j] = tmp
            tmp = rhs[i]
            rhs[i] = rhs[piv]
            rhs[piv] = tmp
        for r in range(i + 1, n):
            fac = K[r * n + i] / K[i * n + i]
            if fac != 0.0:
                for j in range(i, n):
                    K[r * n + j] -= fac * K[i * n + j]
                rhs[r] -= fac * rhs[i]
    for i in range(n - 1, -1, -1):
        tmp = rhs[i]
        for j in range(i + 1, n):
            tmp -= K[i * n + j] * rhs[j]
        rhs[i] = tmp / K[i * n + i]
    return 0


def trsyl(A, B, C, double pivot_tol=1e-12):
    """Solve ``A X - X B = C`` with ``A``, ``B`` upper quasi-triangular."""
    cdef double[:, :] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, :] b = np.ascontiguousarray(B, dtype=np.float64)
    cdef double[:, :] c = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t p = a.shape[0], q = b.shape[0]
    Xarr = np.zeros((p, q), dtype=np.float64)
    cdef double[:, :] X = Xarr
    cdef Py_ssize_t* ra = <Py_ssize_t*> PyMem_Malloc((p + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t* rb = <Py_ssize_t*> PyMem_Malloc((q + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t na, nb, bi, bj, i0, i1, j0, j1, pk, ql, i, j, s, t, u, v
    cdef double rhs[4]
    cdef double K[16]
    cdef double ear[2], eai[2], ebr[2], ebi[2]
    cdef double sep, d, acc
    cdef int bad_i = -1, bad_j = -1, info
    cdef double bad_sep = 0.0
    try:
        na = _starts(a, ra)
        nb = _starts(b, rb)
        with nogil:
            for bi in range(na - 1, -1, -1):
                i0 = ra[bi]
                i1 = ra[bi + 1]
                pk = i1 - i0
                _eigs(a, i0, pk, ear, eai)
                for bj in range(nb):
                    j0 = rb[bj]
                    j1 = rb[bj + 1]
                    ql = j1 - j0
                    _eigs(b, j0, ql, ebr, ebi)
                    sep = 1e300
                    for s in range(pk):
                        for t in range(ql):
                            d = hypot(ear[s] - ebr[t], eai[s] - ebi[t])
                            if d < sep:
                                sep = d
                    if sep < pivot_tol:
                        bad_i = i0
                        bad_j = j0
                        bad_sep = sep
                        break
                    # right-hand side, column-major vec
                    for t in range(ql):
                        for s in range(pk):
                            acc = c[i0 + s, j0 + t]
                            for u in range(i1, p):
                                acc -= a[i0 + s, u] * X[u, j0 + t]
                            for u in range(j0):
                                acc += X[i0 + s, u] * b[u, j0 + t]
                            rhs[t * pk + s] = acc
                    if pk == 1 and ql == 1:
                        X[i0, j0] = rhs[0] / (a[i0, i0] - b[j0, j0])
                        continue
                    # K = I_ql (x) Akk - Bll^T (x) I_pk
                    for u in range(pk * ql):
                        for v in range(pk * ql):
                            K[u * pk * ql + v] = 0.0
                    for t in range(ql):
                        for s in range(pk):
                            for u in range(pk):
                                K[(t * pk + s) * pk * ql + t * pk + u] += a[i0 + s, i0 + u]
                            for v in range(ql):
                                K[(t * pk + s) * pk * ql + v * pk + s] -= b[j0 + v, j0 + t]
                    info = _solve_small(K, rhs, pk * ql)
                    if info != 0:
                        bad_i = i0
                        bad_j = j0
                        bad_sep = 0.0
                        break
                    for t in range(ql):
                        for s in range(pk):
                            X[i0 + s, j0 + t] = rhs[t * pk + s]
                if bad_i >= 0:
                    break
    finally:
        PyMem_Free(ra)
        PyMem_Free(rb)
    if bad_i >= 0:
        raise SingularSylvesterError(
            f"Sylvester pivot {bad_sep:.3e} below {pivot_tol:.1e} at block ({bad_i}, {bad_j})"
        )
    return Xarr


def swap11(double[:, :] T, double[:, :] Q, Py_ssize_t k):
    """Swap the adjacent 1x1 diagonal blocks ``k`` and ``k+1`` in place."""
    cdef double a = T[k, k], b = T[k, k + 1], c = T[k + 1, k + 1]
    cdef double r = hypot(b, c - a)
    cdef double cs, sn, t0, t1
    cdef Py_ssize_t i, j
    if r == 0.0:
        return
    cs = b / r
    sn = (c - a) / r
    with nogil:
        for j in range(k, T.shape[1]):
            t0 = T[k, j]
            t1 = T[k + 1, j]
            T[k, j] = cs * t0 + sn * t1
            T[k + 1, j] = -sn * t0 + cs * t1
        for i in range(k + 2):
            t0 = T[i, k]
            t1 = T[i, k + 1]
            T[i, k] = cs * t0 + sn * t1
            T[i, k + 1] = -sn * t0 + cs * t1
        for i in range(Q.shape[0]):
            t0 = Q[i, k]
            t1 = Q[i, k + 1]
            Q[i, k] = cs * t0 + sn * t1
            Q[i, k + 1] = -sn * t0 + cs * t1
        T[k, k] = c
        T[k + 1, k + 1] = a
        T[k + 1, k] = 0.0
