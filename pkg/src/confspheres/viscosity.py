"""Viscosity sub/supersolution certification and a discrete comparison check.

Certification is a necessary-condition test.  At each point the field is
touched from above and from below by its own 2-jet with the Hessian moved
by ``±ε I``, and the cone condition is checked on the conformal Hessian of
that quadratic.  For C² fields this family is the extremal one.  For grid
data (fitted jets) it is a heuristic, and reports say so.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from ._parallel import ordered_map
from .cones import Verdict, classify, eigenvalues_sym
from .conformal import a_u_matrix
from .errors import (
    DimensionTooSmall,
    FitFailure,
    LatticeMismatch,
    NoConvergence,
    OutOfDomain,
)
from .fields import FundamentalSolution, GridField, Jet2, Kelvin, Scaled
from .sampling import sphere_points

GRID_NOTE = (
    "grid mode: touching family is the fitted 2-jet ± eps*I; complete for C2 data, "
    "heuristic for Lipschitz samples"
)


class Side(enum.Enum):
    FROM_ABOVE = "FromAbove"
    FROM_BELOW = "FromBelow"


@dataclass(frozen=True)
class TouchingProbe:
    center: np.ndarray
    jet: Jet2
    side: Side
    bump: float


def fit_quadratic(grid, x0):
    """Least-squares 2-jet over the 3^n stencil, with the value pinned to u(x0)."""
    n, h = grid.dim, grid.h
    i0 = grid.index_of(x0)[0]
    if np.any(i0 < 1) or np.any(i0 > np.array(grid.shape) - 2):
        raise OutOfDomain("quadratic fit needs one cell of margin")
    offsets = np.array(list(itertools.product((-1, 0, 1), repeat=n)))
    u0 = grid.samples[tuple(i0)]
    rhs = grid.samples[tuple((i0 + offsets).T)] - u0
    z = offsets * h
    pairs = [(a, b) for a in range(n) for b in range(a, n)]
    cols = [z[:, a] for a in range(n)]
    for a, b in pairs:
        cols.append(0.5 * z[:, a] ** 2 if a == b else z[:, a] * z[:, b])
    X = np.stack(cols, axis=1)
    coef, _, rank, _ = np.linalg.lstsq(X, rhs, rcond=None)
    if rank < X.shape[1]:
        raise FitFailure(f"degenerate stencil (rank {rank} < {X.shape[1]})")
    g = coef[:n]
    H = np.zeros((n, n))
    for (a, b), c in zip(pairs, coef[n:]):
        H[a, b] = H[b, a] = c
    return Jet2(float(u0), g, H)


def probe_at(u, x0, epsilon=0.0):
    """``(from_above, from_below)`` quadratic probes touching ``u`` at ``x0``."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    x0 = np.ravel(np.asarray(x0, dtype=float))
    j = fit_quadratic(u, x0) if isinstance(u, GridField) else u.jet(x0)
    eye = np.eye(u.dim)
    above = Jet2(j.value, j.gradient.copy(), j.hessian + epsilon * eye)
    below = Jet2(j.value, j.gradient.copy(), j.hessian - epsilon * eye)
    return (
        TouchingProbe(x0, above, Side.FROM_ABOVE, float(epsilon)),
        TouchingProbe(x0, below, Side.FROM_BELOW, float(epsilon)),
    )


@dataclass(frozen=True)
class ProbeWitness:
    epsilon: float
    above: object  # ConeClass of λ(A^ψ) for the probe from above
    below: object


@dataclass(frozen=True)
class PointRecord:
    point: np.ndarray
    subsolution_ok: bool
    supersolution_ok: bool
    witnesses: tuple
    skipped: tuple = ()


@dataclass(frozen=True)
class ViscosityReport:
    records: tuple
    cone: str
    tol: float
    epsilons: tuple
    grid_mode: bool = False
    notes: tuple = field(default=())

    @property
    def subsolution(self):
        return all(r.subsolution_ok for r in self.records)

    @property
    def supersolution(self):
        return all(r.supersolution_ok for r in self.records)

    @property
    def solution(self):
        return self.subsolution and self.supersolution


def _certify_point(u, x0, cone, epsilons, tol):
    sub_ok = True
    super_ok = True
    witnesses = []
    skipped = []
    for eps in epsilons:
        above, below = probe_at(u, x0, eps)
        if not (above.jet.value > 0 and below.jet.value > 0):
            skipped.append(eps)
            continue
        ca = classify(eigenvalues_sym(a_u_matrix(above.jet)), cone, tol)
        cb = classify(eigenvalues_sym(a_u_matrix(below.jet)), cone, tol)
        # subsolution: λ ∈ R^n \ Γ; supersolution: λ ∈ closure(Γ)
        sub_ok &= ca.verdict is not Verdict.INTERIOR
        super_ok &= cb.verdict is not Verdict.EXTERIOR
        witnesses.append(ProbeWitness(float(eps), ca, cb))
    return PointRecord(x0, bool(sub_ok), bool(super_ok), tuple(witnesses), tuple(skipped))


def certify(u, points, cone, epsilons=(0.0,), tol=1e-9, workers=None):
    if u.dim < 3:
        raise DimensionTooSmall("certify uses A^u and needs n >= 3")
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    pts = [np.ravel(np.asarray(p, dtype=float)) for p in points]
    eps = tuple(float(e) for e in epsilons)
    records = ordered_map(lambda p: _certify_point(u, p, cone, eps, tol), pts, workers)
    grid_mode = isinstance(u, GridField)
    return ViscosityReport(
        tuple(records), str(cone), tol, eps, grid_mode, (GRID_NOTE,) if grid_mode else ()
    )


# discrete comparison principle -------------------------------------------


class Stencil(NamedTuple):
    interior: np.ndarray  # flat indices
    offsets: np.ndarray  # flat neighbour offsets, 2n of them
    boundary: np.ndarray  # flat indices


def lattice_stencil(shape):
    shape = tuple(int(s) for s in shape)
    strides = np.cumprod((1,) + shape[::-1])[:-1][::-1]
    offsets = np.concatenate([strides, -strides]).astype(np.int64)
    inner = np.zeros(shape, dtype=bool)
    inner[tuple(slice(1, s - 1) for s in shape)] = True
    flat = np.arange(int(np.prod(shape))).reshape(shape)
    return Stencil(flat[inner].astype(np.int64), offsets, flat[~inner].astype(np.int64))


def discrete_laplacian(grid):
    """Δ_h on interior lattice points (flat, in ``lattice_stencil`` order)."""
    st = lattice_stencil(grid.shape)
    return kernels.stencil_residual(grid.samples, st.interior, st.offsets) / grid.h**2


@dataclass(frozen=True)
class ComparisonReport:
    min_gap: float
    argmin: np.ndarray
    super_ok: bool
    sub_ok: bool
    boundary_ok: bool
    max_laplacian_u: float
    min_laplacian_v: float
    min_boundary_gap: float

    @property
    def hypotheses_ok(self):
        return self.super_ok and self.sub_ok and self.boundary_ok

    @property
    def conclusion_ok(self):
        return self.min_gap > 0


def discrete_comparison(u, v, puncture, tol=1e-8):
    """Check the hypotheses and conclusion of the comparison principle for Δ_h.

    ``u`` should be superharmonic away from ``puncture``, ``v`` subharmonic,
    and ``u > v`` on the lattice boundary.  The three hypotheses and the
    interior minimum of ``u - v`` are reported separately; nothing is
    inferred.
    """
    if not (isinstance(u, GridField) and isinstance(v, GridField)) or not u.same_lattice(v):
        raise LatticeMismatch("u and v must be grid fields on the same lattice")
    st = lattice_stencil(u.shape)
    pidx = u.index_of(puncture)[0]
    if np.any(pidx < 1) or np.any(pidx > np.array(u.shape) - 2):
        raise OutOfDomain("puncture must be an interior lattice point")
    pflat = int(np.ravel_multi_index(tuple(pidx), u.shape))
    keep = st.interior != pflat

    lap_u = kernels.stencil_residual(u.samples, st.interior, st.offsets) / u.h**2
    lap_v = kernels.stencil_residual(v.samples, st.interior, st.offsets) / v.h**2
    diff = (u.samples - v.samples).ravel()

    inner = st.interior[keep]
    k = int(np.argmin(diff[inner]))
    argmin = u.origin + u.h * np.array(np.unravel_index(inner[k], u.shape))
    bgap = float(np.min(diff[st.boundary]))
    return ComparisonReport(
        min_gap=float(diff[inner][k]),
        argmin=argmin,
        super_ok=bool(np.all(lap_u[keep] <= tol)),
        sub_ok=bool(np.all(lap_v >= -tol)),
        boundary_ok=bgap > 0,
        max_laplacian_u=float(np.max(lap_u[keep])),
        min_laplacian_v=float(np.min(lap_v)),
        min_boundary_gap=bgap,
    )


def discrete_harmonic(boundary, spacing, origin=None, tol=1e-10, max_iter=200000):
    """Fill the interior of ``boundary`` (an n-d array) by Jacobi iteration.

    Only the boundary layer of the input is used.  ``tol`` bounds the
    unscaled stencil residual ``|Σ nb - 2n u|``.
    """
    b = np.array(boundary, dtype=float)
    st = lattice_stencil(b.shape)
    flat = b.ravel()
    flat[st.interior] = flat[st.boundary].mean()
    out, res, _ = kernels.jacobi_relax(flat, st.interior, st.offsets, tol, max_iter)
    if res > tol:
        raise NoConvergence(f"Jacobi relaxation stopped at residual {res:.3e}", res)
    return GridField(out.reshape(b.shape), spacing, origin)


# pieces of the classical Liouville argument --------------------------------


class ProofPair(NamedTuple):
    v: object
    u1: object
    v1: object


def sphere_min(u, samples=2000, radius=1.0, center=None):
    pts = radius * sphere_points(u.dim, samples)
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    return float(np.min(u.values(pts)))


def build_proof_pair(u, samples=2000):
    """``v = ½ (min_{|y|=1} u) |x|^(2-n)`` and the unit-sphere Kelvin transforms."""
    m = sphere_min(u, samples)
    v = Scaled(FundamentalSolution(np.zeros(u.dim)), 0.5 * m)
    return ProofPair(v, Kelvin(u, np.zeros(u.dim), 1.0), Kelvin(v, np.zeros(u.dim), 1.0))


def decay_lower_bound(u, radii, samples_per_sphere=2000, center=None):
    """``min_{|y|=R} |y|^(n-2) u(y)`` for each ``R`` in ``radii``."""
    n = u.dim
    dirs = sphere_points(n, samples_per_sphere)
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    out = []
    for R in radii:
        out.append(float(R ** (n - 2) * np.min(u.values(c + R * dirs))))
    return out
