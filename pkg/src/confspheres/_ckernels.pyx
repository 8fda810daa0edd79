# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``.

Operation order matches the Python versions so that the Jacobi
eigensolver and the symmetric-function recurrence agree bit for bit.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


cdef double _off_norm(double[:, ::1] a, Py_ssize_t n) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(n):
            if i != j:
                acc += a[i, j] * a[i, j]
    return sqrt(acc)


def jacobi_eigh(M, double rtol=1e-13, int max_sweeps=30):
    cdef double[:, ::1] a = np.array(M, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, p, q, k
    cdef double scale = 0.0, target, off, apq, theta, t, c, s
    cdef double akp, akq, apk, aqk
    cdef int sweeps = 0

    with nogil:
        for i in range(n):
            for j in range(n):
                scale += a[i, j] * a[i, j]
        scale = sqrt(scale)
        target = rtol * scale
        off = _off_norm(a, n)
        while off > target and sweeps < max_sweeps:
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for k in range(n):
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - s * akq
                        a[k, q] = s * akp + c * akq
                    for k in range(n):
                        apk = a[p, k]
                        aqk = a[q, k]
                        a[p, k] = c * apk - s * aqk
                        a[q, k] = s * apk + c * aqk
                    a[p, q] = 0.0
                    a[q, p] = 0.0
            sweeps += 1
            off = _off_norm(a, n)

    eig = np.empty(n, dtype=np.float64)
    for i in range(n):
        eig[i] = a[i, i]
    eig.sort()
    return eig, off, sweeps, off <= target


def elementary_symmetric(lam):
    cdef const double[::1] l = np.ascontiguousarray(np.ravel(lam), dtype=np.float64)
    cdef Py_ssize_t n = l.shape[0]
    out = np.zeros(n + 1, dtype=np.float64)
    cdef double[::1] e = out
    cdef Py_ssize_t i, j
    cdef double li
    e[0] = 1.0
    with nogil:
        for i in range(n):
            li = l[i]
            for j in range(i + 1, 0, -1):
                e[j] += li * e[j - 1]
    return out


def stencil_residual(u, interior, offsets):
    cdef const double[::1] uu = np.ascontiguousarray(np.ravel(u), dtype=np.float64)
    cdef const cnp.int64_t[::1] idx = np.ascontiguousarray(interior, dtype=np.int64)
    cdef const cnp.int64_t[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t m = idx.shape[0], no = off.shape[0], i, k
    cdef cnp.int64_t c
    cdef double acc
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            c = idx[i]
            acc = 0.0
            for k in range(no):
                acc += uu[c + off[k]]
            o[i] = acc - no * uu[c]
    return out


def jacobi_relax(u, interior, offsets, double tol=1e-10, long max_iter=100000):
    arr = np.array(np.ravel(u), dtype=np.float64, copy=True)
    cdef double[::1] cur = arr
    cdef double[::1] nbs
    cdef const cnp.int64_t[::1] idx = np.ascontiguousarray(interior, dtype=np.int64)
    cdef const cnp.int64_t[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t m = idx.shape[0], no = off.shape[0], i, k
    cdef cnp.int64_t c
    cdef double acc, r, res
    cdef double fm = <double> no
    cdef long it = 0
    nb_arr = np.empty(m, dtype=np.float64)
    nbs = nb_arr
    with nogil:
        while True:
            res = 0.0
            for i in range(m):
                c = idx[i]
                acc = 0.0
                for k in range(no):
                    acc += cur[c + off[k]]
                nbs[i] = acc
                r = fabs(acc - fm * cur[c])
                if r > res:
                    res = r
            if res <= tol or it >= max_iter:
                break
            for i in range(m):
                cur[idx[i]] = nbs[i] / fm
            it += 1
    return arr, res, it
