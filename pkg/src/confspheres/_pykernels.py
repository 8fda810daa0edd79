"""Pure-Python/numpy versions of the hot kernels.

Every function here has a twin with the same signature and the same
floating-point operation order in ``_ckernels.pyx``.
"""

import math

import numpy as np


def jacobi_eigh(M, rtol=1e-13, max_sweeps=30):
    """Cyclic Jacobi eigenvalues of a symmetric matrix.

    Returns ``(eigenvalues, off_norm, sweeps, converged)`` with the
    eigenvalues sorted ascending.  ``off_norm`` is the Frobenius norm of
    the remaining off-diagonal part.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    a = [[float(M[i, j]) for j in range(n)] for i in range(n)]

    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i][j] * a[i][j]
    scale = math.sqrt(scale)
    target = rtol * scale

    sweeps = 0
    off = _off_norm(a, n)
    while off > target and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if apq == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k][p]
                    akq = a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p][k]
                    aqk = a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
                a[p][q] = 0.0
                a[q][p] = 0.0
        sweeps += 1
        off = _off_norm(a, n)

    eig = np.sort(np.array([a[i][i] for i in range(n)]))
    return eig, off, sweeps, off <= target


def _off_norm(a, n):
    acc = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                acc += a[i][j] * a[i][j]
    return math.sqrt(acc)


def elementary_symmetric(lam):
    """All elementary symmetric functions e_0..e_n of ``lam``."""
    lam = [float(v) for v in np.asarray(lam, dtype=float).ravel()]
    n = len(lam)
    e = [0.0] * (n + 1)
    e[0] = 1.0
    for i in range(n):
        li = lam[i]
        for j in range(i + 1, 0, -1):
            e[j] += li * e[j - 1]
    return np.array(e)


def stencil_residual(u, interior, offsets):
    """``sum(u[i + off]) - 2n u[i]`` at each flat interior index ``i``."""
    u = np.ascontiguousarray(u, dtype=float).ravel()
    interior = np.asarray(interior, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)
    nb = u[interior[:, None] + offsets[None, :]].sum(axis=1)
    return nb - len(offsets) * u[interior]


def jacobi_relax(u, interior, offsets, tol=1e-10, max_iter=100000):
    """Jacobi iteration for the discrete Laplace equation, boundary fixed.

    Works in place on a flat copy of ``u`` and returns
    ``(u, residual, iterations)``.  The residual is the unscaled stencil
    residual ``max |sum(nb) - 2n u|`` of the returned array.
    """
    u = np.array(u, dtype=float).ravel()
    interior = np.asarray(interior, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)
    idx = interior[:, None] + offsets[None, :]
    m = float(len(offsets))
    it = 0
    while True:
        nb = u[idx].sum(axis=1)
        res = float(np.max(np.abs(nb - m * u[interior]))) if len(interior) else 0.0
        if res <= tol or it >= max_iter:
            return u, res, it
        u[interior] = nb / m
        it += 1
