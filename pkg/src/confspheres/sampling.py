"""Deterministic, seed-free point sets.

Nothing here touches a random number generator, so every report built
from these samples is reproducible byte for byte.
"""

import math

import numpy as np
from scipy.special import ndtri

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71)


def radical_inverse(i, base):
    inv = 1.0 / base
    f = inv
    out = 0.0
    while i > 0:
        out += f * (i % base)
        i //= base
        f *= inv
    return out


def halton(m, d, skip=1):
    """First ``m`` Halton points in ``[0, 1)^d`` after skipping ``skip``."""
    if d > len(_PRIMES):
        raise ValueError(f"Halton sequence supports d <= {len(_PRIMES)}")
    return np.array(
        [[radical_inverse(i, _PRIMES[k]) for k in range(d)] for i in range(skip, skip + m)]
    )


def sphere_points(n, m):
    """``m`` quasi-uniform unit vectors in R^n.

    n = 2: equally spaced angles.  n = 3: Fibonacci lattice.  n >= 4: Halton
    points pushed through the inverse normal CDF and normalized.
    """
    if m < 1:
        raise ValueError("need at least one point")
    if n == 2:
        t = 2 * math.pi * (np.arange(m) + 0.5) / m
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    if n == 3:
        golden = math.pi * (3.0 - math.sqrt(5.0))
        i = np.arange(m)
        z = 1.0 - (2.0 * i + 1.0) / m
        r = np.sqrt(1.0 - z * z)
        phi = golden * i
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    g = ndtri(halton(m, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def ball_points(n, m, radius=1.0):
    """``m`` deterministic points inside the ball, radius ∝ u^(1/n)."""
    h = halton(m, n + 1)
    dirs = ndtri(h[:, :n])
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    return radius * h[:, n:] ** (1.0 / n) * dirs


def box_points(n, m, lo, hi):
    h = halton(m, n)
    return lo + (hi - lo) * h


def annulus_points(n, m, r_in, r_out, center=None):
    """Deterministic points with ``r_in <= |y - center| <= r_out``."""
    h = halton(m, n + 1)
    g = ndtri(h[:, :n])
    g = g / np.linalg.norm(g, axis=1, keepdims=True)
    r = r_in + (r_out - r_in) * h[:, n]
    pts = r[:, None] * g
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    return pts


class KroneckerStream:
    """Endless additive-recurrence stream ``frac(i * sqrt(p_k))`` in [0, 1).

    A deterministic substitute for a random generator: each call to
    :meth:`take` consumes the next point of a ``d``-dimensional Kronecker
    sequence whose generators are square roots of successive primes.
    """

    def __init__(self, dim=64, start=1):
        primes = []
        k = 2
        while len(primes) < dim:
            if all(k % p for p in primes if p * p <= k):
                primes.append(k)
            k += 1
        self._alpha = np.sqrt(np.array(primes, dtype=float)) % 1.0
        self._i = start
        self._buf = []

    def next(self):
        if not self._buf:
            self._buf = list((self._i * self._alpha) % 1.0)
            self._i += 1
        return self._buf.pop(0)

    def take(self, k):
        return np.array([self.next() for _ in range(k)])

    def uniform(self, lo, hi, size=None):
        if size is None:
            return lo + (hi - lo) * self.next()
        return lo + (hi - lo) * self.take(int(np.prod(size))).reshape(size)
