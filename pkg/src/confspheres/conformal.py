"""The conformal Hessian and its ``w`` form.

For a positive ``u`` on R^n (n >= 3)::

    A^u = -2/(n-2) u^(-(n+2)/(n-2)) ∇²u
          + 2n/(n-2)² u^(-2n/(n-2)) ∇u⊗∇u
          - 2/(n-2)² u^(-2n/(n-2)) |∇u|² I

and with ``u = w^(-(n-2)/2)`` the same matrix reads ``A_w = w∇²w - ½|∇w|² I``,
which also makes sense for n = 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fields
from .cones import ConeClass, ConeSpec, classify, elementary_symmetric, eigenvalues_sym
from .errors import DimensionTooSmall
from .mobius import apply

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Coefficients:
    """The five constants in the A^u formula.

    Only exists so tests and the CLI can corrupt one of them on purpose.
    """

    hess: float
    hess_exp: float
    outer: float
    trace: float
    grad_exp: float

    @classmethod
    def standard(cls, n):
        if n < 3:
            raise DimensionTooSmall("A^u needs n >= 3; use a_w for n = 2")
        return cls(
            hess=-2.0 / (n - 2),
            hess_exp=-(n + 2) / (n - 2),
            outer=2.0 * n / (n - 2) ** 2,
            trace=-2.0 / (n - 2) ** 2,
            grad_exp=-2.0 * n / (n - 2),
        )

    def perturbed(self, **rel):
        """Copy with selected coefficients multiplied by ``1 + rel[name]``."""
        vals = {k: getattr(self, k) * (1.0 + rel.get(k, 0.0)) for k in self.__dataclass_fields__}
        return Coefficients(**vals)


@dataclass(frozen=True)
class ConformalEval:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    sigmas: np.ndarray
    cone_class: ConeClass | None


def a_u_matrix(jet, coeffs=None):
    n = jet.dim
    c = coeffs or Coefficients.standard(n)
    u, g, H = jet.value, jet.gradient, jet.hessian
    A = (
        c.hess * u**c.hess_exp * H
        + c.outer * u**c.grad_exp * np.outer(g, g)
        + c.trace * u**c.grad_exp * (g @ g) * np.eye(n)
    )
    return 0.5 * (A + A.T)


def a_w_matrix(jet):
    w, g, H = jet.value, jet.gradient, jet.hessian
    A = w * H - 0.5 * (g @ g) * np.eye(jet.dim)
    return 0.5 * (A + A.T)


def evaluate_matrix(A, cone=None, tol=DEFAULT_TOL):
    eig = eigenvalues_sym(A)
    sig = elementary_symmetric(eig)[1:]
    cls = classify(eig, cone, tol) if cone is not None else None
    return ConformalEval(A, eig, sig, cls)


def conformal_hessian(field, y, cone=None, tol=DEFAULT_TOL, coeffs=None):
    if field.dim < 3:
        raise DimensionTooSmall("conformal_hessian needs n >= 3; use a_w for n = 2")
    return evaluate_matrix(a_u_matrix(field.jet(y), coeffs), cone, tol)


def a_w(field, y, cone=None, tol=DEFAULT_TOL):
    if field.dim < 2:
        raise DimensionTooSmall("a_w needs n >= 2")
    return evaluate_matrix(a_w_matrix(field.jet(y)), cone, tol)


def cross_check(field, y, coeffs=None):
    """Entrywise max difference between the A^u and A_w routes at ``y``."""
    A = a_u_matrix(field.jet(y), coeffs)
    B = a_w_matrix(fields.w_substitution(field).jet(y))
    return float(np.max(np.abs(A - B)))


def trace_identity_residual(field, y):
    """``trace(A^u) + 2/(n-2) u^(-(n+2)/(n-2)) Δu`` from one jet."""
    n = field.dim
    if n < 3:
        raise DimensionTooSmall("trace identity needs n >= 3")
    j = field.jet(y)
    lhs = float(np.trace(a_u_matrix(j)))
    rhs = -2.0 / (n - 2) * j.value ** (-(n + 2) / (n - 2)) * j.laplacian()
    return lhs - rhs


def invariance_residual(field, psi, y, coeffs=None):
    """``max |λ(A^{u_ψ})(y) - λ(A^u)(ψ(y))|`` with sorted eigenvalues."""
    pushed = fields.pushforward(field, psi)
    left = eigenvalues_sym(a_u_matrix(pushed.jet(y), coeffs))
    right = eigenvalues_sym(a_u_matrix(field.jet(apply(psi, np.asarray(y, float))), coeffs))
    return float(np.max(np.abs(left - right)))
