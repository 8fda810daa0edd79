"""Möbius transformations of R^n stored as words of generators.

A word ``(g1, g2, ..., gk)`` represents the composition ``g1 ∘ g2 ∘ ... ∘ gk``:
the rightmost generator acts first.  The point at infinity is not modelled;
evaluating any inversion stage within ``SINGULAR_TOL`` of its pole raises
:class:`SingularPoint`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, SingularPoint

SINGULAR_TOL = 1e-14


@dataclass(frozen=True)
class Translation:
    b: tuple

    def __init__(self, b):
        object.__setattr__(self, "b", tuple(float(v) for v in np.ravel(b)))

    def inverse(self):
        return Translation([-v for v in self.b])


@dataclass(frozen=True)
class Scaling:
    a: float

    def __post_init__(self):
        if self.a == 0 or not np.isfinite(self.a):
            raise ValueError("scaling factor must be finite and nonzero")

    def inverse(self):
        return Scaling(1.0 / self.a)


@dataclass(frozen=True)
class Inversion:
    """x -> x / |x|^2; its own inverse."""

    def inverse(self):
        return self


class MapJet(NamedTuple):
    """Second-order data of a map at one point.

    ``second[k]`` is the Hessian of the k-th output component.  ``log_det``
    and its derivatives describe ``log |J_psi|`` as a scalar function of
    the input point.
    """

    value: np.ndarray
    jacobian: np.ndarray
    second: np.ndarray
    log_det: float
    log_det_grad: np.ndarray
    log_det_hess: np.ndarray


class MobiusMap:
    """Immutable generator word acting on R^n."""

    __slots__ = ("_word", "_dim")

    def __init__(self, word, dim):
        dim = int(dim)
        if dim < 2:
            raise ValueError("dimension must be at least 2")
        word = tuple(word)
        for g in word:
            if not isinstance(g, (Translation, Scaling, Inversion)):
                raise TypeError(f"not a Möbius generator: {g!r}")
            if isinstance(g, Translation) and len(g.b) != dim:
                raise DimensionMismatch(
                    f"translation vector has length {len(g.b)}, expected {dim}"
                )
        self._word = word
        self._dim = dim

    @property
    def word(self):
        return self._word

    @property
    def dim(self):
        return self._dim

    def __repr__(self):
        inner = " ∘ ".join(repr(g) for g in self._word) or "identity"
        return f"MobiusMap({inner}, dim={self._dim})"

    def __eq__(self, other):
        return (
            isinstance(other, MobiusMap)
            and self._dim == other._dim
            and self._word == other._word
        )

    def __hash__(self):
        return hash((self._word, self._dim))

    def __call__(self, x):
        return apply(self, x)


def identity(dim):
    return MobiusMap((), dim)


def translation(b):
    b = np.ravel(b)
    return MobiusMap((Translation(b),), len(b))


def scaling(a, dim):
    return MobiusMap((Scaling(float(a)),), dim)


def inversion(dim):
    return MobiusMap((Inversion(),), dim)


def _check_point(psi, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != psi.dim:
        raise DimensionMismatch(f"point has dimension {x.shape[-1]}, map has {psi.dim}")
    return x


def apply(psi, x):
    """Evaluate ``psi(x)`` stage by stage.  ``x`` may be a batch ``(m, n)``."""
    z = _check_point(psi, x).copy()
    for g in reversed(psi.word):
        z = _apply_generator(g, z)
    return z


def _apply_generator(g, z):
    if isinstance(g, Translation):
        return z + np.asarray(g.b)
    if isinstance(g, Scaling):
        return g.a * z
    s = np.sum(z * z, axis=-1, keepdims=True)
    if np.any(np.sqrt(s) < SINGULAR_TOL):
        raise SingularPoint("inversion stage evaluated at its pole")
    return z / s


def jacobian_det_abs(psi, x):
    """``|det Dpsi(x)|`` by the chain rule over the word."""
    z = _check_point(psi, x).copy()
    n = psi.dim
    det = np.ones(z.shape[:-1]) if z.ndim > 1 else 1.0
    for g in reversed(psi.word):
        if isinstance(g, Scaling):
            det = det * abs(g.a) ** n
        elif isinstance(g, Inversion):
            s = np.sum(z * z, axis=-1)
            if np.any(np.sqrt(s) < SINGULAR_TOL):
                raise SingularPoint("inversion stage evaluated at its pole")
            det = det * s ** (-n)
        z = _apply_generator(g, z)
    return det


def log_jacobian_det_abs(psi, x):
    """``log |det Dpsi(x)|``; batched like :func:`apply`."""
    z = _check_point(psi, x).copy()
    n = psi.dim
    out = np.zeros(z.shape[:-1]) if z.ndim > 1 else 0.0
    for g in reversed(psi.word):
        if isinstance(g, Scaling):
            out = out + n * np.log(abs(g.a))
        elif isinstance(g, Inversion):
            s = np.sum(z * z, axis=-1)
            if np.any(np.sqrt(s) < SINGULAR_TOL):
                raise SingularPoint("inversion stage evaluated at its pole")
            out = out - n * np.log(s)
        z = _apply_generator(g, z)
    return out


def compose(f, g):
    """The map ``f ∘ g`` (``g`` acts first)."""
    if f.dim != g.dim:
        raise DimensionMismatch(f"cannot compose maps of dimension {f.dim} and {g.dim}")
    return MobiusMap(f.word + g.word, f.dim)


def inverse(f):
    return MobiusMap(tuple(g.inverse() for g in reversed(f.word)), f.dim)


def kelvin_point(x, lam, y):
    """Reflection of ``y`` through the sphere of radius ``lam`` about ``x``.

    Batched over leading axes of ``y``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = y - x
    s = np.sum(d * d, axis=-1, keepdims=True)
    if np.any(np.sqrt(s) < SINGULAR_TOL):
        raise SingularPoint("Kelvin reflection evaluated at its center")
    return x + lam * lam * d / s


def kelvin_map(x, lam):
    """The Kelvin point map as a generator word (used for cross-checks)."""
    x = np.ravel(np.asarray(x, dtype=float))
    n = len(x)
    return MobiusMap(
        (Translation(x), Scaling(lam * lam), Inversion(), Translation(-x)), n
    )


def propagate(psi, y):
    """Exact value, first and second derivatives of ``psi`` at ``y``.

    Also carries the jets of ``log |J_psi|``, assembled stage by stage so
    that every quantity is closed form (no numerical differentiation).
    """
    y = _check_point(psi, y)
    if y.ndim != 1:
        raise ValueError("propagate expects a single point")
    n = psi.dim
    p = y.astype(float).copy()
    P = np.eye(n)
    T = np.zeros((n, n, n))
    L = 0.0
    Lg = np.zeros(n)
    Lh = np.zeros((n, n))

    for g in reversed(psi.word):
        if isinstance(g, Translation):
            p = p + np.asarray(g.b)
            continue
        if isinstance(g, Scaling):
            p = g.a * p
            P = g.a * P
            T = g.a * T
            L += n * np.log(abs(g.a))
            continue

        s = float(p @ p)
        if np.sqrt(s) < SINGULAR_TOL:
            raise SingularPoint("inversion stage evaluated at its pole")
        eye = np.eye(n)
        # log|J| of the inversion at z is -n log|z|^2
        h_grad = -2.0 * n * p / s
        h_hess = -2.0 * n * (eye / s - 2.0 * np.outer(p, p) / s**2)
        L += -n * np.log(s)
        Lg = Lg + P.T @ h_grad
        Lh = Lh + P.T @ h_hess @ P + np.tensordot(h_grad, T, axes=1)

        Dg = eye / s - 2.0 * np.outer(p, p) / s**2
        D2g = (
            -2.0
            * (
                np.einsum("ij,l->ijl", eye, p)
                + np.einsum("il,j->ijl", eye, p)
                + np.einsum("jl,i->ijl", eye, p)
            )
            / s**2
            + 8.0 * np.einsum("i,j,l->ijl", p, p, p) / s**3
        )
        T = np.einsum("ja,ijl,lb->iab", P, D2g, P) + np.tensordot(Dg, T, axes=1)
        P = Dg @ P
        p = p / s

    Lh = 0.5 * (Lh + Lh.T)
    T = 0.5 * (T + np.transpose(T, (0, 2, 1)))
    return MapJet(p, P, T, float(L), Lg, Lh)
