"""Eigenvalues, elementary symmetric functions and cone membership.

Cones are described by sigma-positivity: ``Γ_k = {σ_1, ..., σ_k > 0}``, or a
custom index set.  Membership is decided with a tolerance band because the
boundary of a cone is never hit exactly in floating point.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import comb

import numpy as np

from . import kernels
from .errors import IndexOutOfRange, NoConvergence

JACOBI_RTOL = 1e-13
JACOBI_MAX_SWEEPS = 30


def elementary_symmetric(lam):
    """``[σ_0, σ_1, ..., σ_n]`` by the incremental product recurrence."""
    return kernels.elementary_symmetric(np.asarray(lam, dtype=float))


def sigma_k(lam, k):
    lam = np.ravel(np.asarray(lam, dtype=float))
    if not 1 <= k <= len(lam):
        raise IndexOutOfRange(f"k={k} outside 1..{len(lam)}")
    return float(elementary_symmetric(lam)[k])


def eigenvalues_sym(M):
    """Sorted eigenvalues of a symmetric matrix (cyclic Jacobi).

    The input is symmetrized first.  Raises :class:`NoConvergence` when the
    off-diagonal norm is still above ``1e-13 * ||M||`` after 30 sweeps.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    M = 0.5 * (M + M.T)
    eig, off, sweeps, ok = kernels.jacobi_eigh(M, JACOBI_RTOL, JACOBI_MAX_SWEEPS)
    if not ok:
        raise NoConvergence(f"Jacobi did not converge in {sweeps} sweeps (off-norm {off:.3e})", off)
    return eig


class Verdict(enum.Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    EXTERIOR = "Exterior"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ConeSpec:
    """A symmetric cone ``{λ : σ_j(λ) > 0 for j in indices}``.

    Use :meth:`gamma` for ``Γ_k`` and :meth:`custom` for other index sets.
    """

    indices: tuple
    dim: int
    name: str = ""

    @classmethod
    def gamma(cls, k, dim):
        if not 1 <= k <= dim:
            raise IndexOutOfRange(f"Γ_k needs 1 <= k <= n, got k={k}, n={dim}")
        return cls(tuple(range(1, k + 1)), dim, f"Gamma_{k}")

    @classmethod
    def custom(cls, indices, dim):
        idx = tuple(sorted(set(int(i) for i in indices)))
        if not idx or idx[0] < 1 or idx[-1] > dim:
            raise IndexOutOfRange(f"indices must lie in 1..{dim}")
        if idx[0] != 1:
            raise ValueError("cone must sit inside Γ_1, so index 1 is required")
        spec = cls(idx, dim, "sigma{" + ",".join(map(str, idx)) + "}")
        spec._check_probes()
        return spec

    def _check_probes(self):
        n = self.dim
        ones = np.ones(n)
        if classify(ones, self, 1e-12).verdict is not Verdict.INTERIOR:
            raise ValueError("cone must contain the positive cone")
        tilted = np.ones(n)
        tilted[-1] = -n
        for probe in (tilted, -ones):
            if classify(probe, self, 1e-12).verdict is Verdict.INTERIOR:
                raise ValueError("cone must lie inside Γ_1")

    @property
    def k(self):
        return max(self.indices)

    def __str__(self):
        return self.name or f"sigma{self.indices}"


@dataclass(frozen=True)
class ConeClass:
    verdict: Verdict
    margin: float


def normalized_sigmas(lam, indices):
    """``σ_j / (C(n,j) max(1, |λ|_∞)^j)`` for each requested ``j``."""
    lam = np.ravel(np.asarray(lam, dtype=float))
    n = len(lam)
    e = elementary_symmetric(lam)
    big = max(1.0, float(np.max(np.abs(lam)))) if n else 1.0
    return np.array([e[j] / (comb(n, j) * big**j) for j in indices])


def classify(lam, cone, tol=1e-9):
    """Interior / Boundary / Exterior of ``cone`` with a scale-normalized band."""
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    lam = np.ravel(np.asarray(lam, dtype=float))
    if len(lam) != cone.dim:
        raise ValueError(f"λ has length {len(lam)}, cone has dimension {cone.dim}")
    margin = float(np.min(normalized_sigmas(lam, cone.indices)))
    if margin > tol:
        verdict = Verdict.INTERIOR
    elif margin < -tol:
        verdict = Verdict.EXTERIOR
    else:
        verdict = Verdict.BOUNDARY
    return ConeClass(verdict, margin)


def parse_cone(text, dim):
    """``gammaK:2`` / ``gamma2`` / ``sigma:1,3``."""
    t = text.strip().lower()
    if t.startswith("gammak:"):
        return ConeSpec.gamma(int(t.split(":", 1)[1]), dim)
    if t.startswith("gamma"):
        return ConeSpec.gamma(int(t[5:].lstrip("_:")), dim)
    if t.startswith("sigma:"):
        return ConeSpec.custom([int(v) for v in t[6:].split(",")], dim)
    raise ValueError(f"unknown cone spec {text!r}")
