"""Positive scalar fields on R^n with exact second-order jets.

Closed-form fields carry hand-coded first and second derivatives.  Wrapper
fields (Kelvin transform, Möbius pushforward, the ``w`` substitution,
scaling) propagate jets through the second-order chain rule, so nothing in
this module differentiates numerically except :class:`GridField`, which
uses central differences on its lattice.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import mobius
from .errors import (
    DimensionMismatch,
    DimensionTooSmall,
    GridFormatError,
    NonPositiveValue,
    OutOfDomain,
    SingularPoint,
)

POLE_TOL = 1e-10


@dataclass(frozen=True)
class Jet2:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray

    @property
    def dim(self):
        return len(self.gradient)

    def laplacian(self):
        return float(np.trace(self.hessian))


def _jet(value, grad, hess):
    hess = np.asarray(hess, dtype=float)
    return Jet2(float(value), np.asarray(grad, dtype=float), 0.5 * (hess + hess.T))


def _product(a, b):
    return _jet(
        a.value * b.value,
        a.value * b.gradient + b.value * a.gradient,
        a.value * b.hessian
        + b.value * a.hessian
        + np.outer(a.gradient, b.gradient)
        + np.outer(b.gradient, a.gradient),
    )


def _pullback(outer, P, T):
    """Jet of ``u ∘ k`` from the jet of ``u`` at ``k(y)`` and the map's derivatives."""
    return _jet(
        outer.value,
        P.T @ outer.gradient,
        P.T @ outer.hessian @ P + np.tensordot(outer.gradient, T, axes=1),
    )


def _power(j, p):
    """Jet of ``u**p`` for positive ``u``."""
    u = j.value
    return _jet(
        u**p,
        p * u ** (p - 1) * j.gradient,
        p * u ** (p - 1) * j.hessian
        + p * (p - 1) * u ** (p - 2) * np.outer(j.gradient, j.gradient),
    )


class ScalarField:
    """Base class.  Subclasses implement ``_jet`` and ``_values``."""

    dim: int

    def jet(self, y):
        y = self._point(y)
        j = self._jet(y)
        if not j.value > 0:
            raise NonPositiveValue(f"{self.describe()} has value {j.value!r} at {y.tolist()}")
        return j

    def values(self, Y):
        """Values at a batch of points ``(m, n)``; returns shape ``(m,)``."""
        Y = np.asarray(Y, dtype=float)
        if Y.ndim != 2 or Y.shape[1] != self.dim:
            raise DimensionMismatch(f"expected points of shape (m, {self.dim}), got {Y.shape}")
        v = self._values(Y)
        if not np.all(v > 0):
            i = int(np.argmin(np.where(v > 0, np.inf, v)))
            raise NonPositiveValue(f"{self.describe()} has value {v[i]!r} at {Y[i].tolist()}")
        return v

    def value(self, y):
        return float(self.values(self._point(y)[None, :])[0])

    def __call__(self, y):
        return self.value(y)

    def _point(self, y):
        y = np.asarray(y, dtype=float).ravel()
        if len(y) != self.dim:
            raise DimensionMismatch(f"point has dimension {len(y)}, field has {self.dim}")
        return y

    def describe(self):
        return type(self).__name__

    def __repr__(self):
        return self.describe()


def eval_jet(field, y):
    return field.jet(y)


class Constant(ScalarField):
    def __init__(self, c, dim):
        if not c > 0:
            raise NonPositiveValue("constant field must be positive")
        self.c = float(c)
        self.dim = int(dim)

    def _jet(self, y):
        n = self.dim
        return Jet2(self.c, np.zeros(n), np.zeros((n, n)))

    def _values(self, Y):
        return np.full(len(Y), self.c)

    def describe(self):
        return f"constant({self.c:g})"


class Bubble(ScalarField):
    """``(1 + |y - center|^2)^(-(n-2)/2)``."""

    def __init__(self, center, dim=None):
        center = np.ravel(np.asarray(center, dtype=float))
        if dim is not None and len(center) != dim:
            if len(center) == 1 and center[0] == 0:
                center = np.zeros(dim)
            else:
                raise DimensionMismatch("center does not match dim")
        self.center = center
        self.dim = len(center)

    def _jet(self, y):
        n = self.dim
        d = y - self.center
        q = 1.0 + d @ d
        e = (n - 2) / 2.0
        val = q**-e
        grad = -(n - 2) * q ** (-e - 1) * d
        hess = -(n - 2) * (
            q ** (-e - 1) * np.eye(n) - 2 * (e + 1) * q ** (-e - 2) * np.outer(d, d)
        )
        return _jet(val, grad, hess)

    def _values(self, Y):
        d = Y - self.center
        return (1.0 + np.sum(d * d, axis=1)) ** (-(self.dim - 2) / 2.0)

    def describe(self):
        return f"bubble({','.join(f'{v:g}' for v in self.center)})"


class FundamentalSolution(ScalarField):
    """``|y - pole|^(2-n)``."""

    def __init__(self, pole, dim=None):
        pole = np.ravel(np.asarray(pole, dtype=float))
        if dim is not None and len(pole) != dim:
            if len(pole) == 1 and pole[0] == 0:
                pole = np.zeros(dim)
            else:
                raise DimensionMismatch("pole does not match dim")
        self.pole = pole
        self.dim = len(pole)

    def _jet(self, y):
        n = self.dim
        d = y - self.pole
        s = d @ d
        if math.sqrt(s) < POLE_TOL:
            raise SingularPoint("fundamental solution evaluated at its pole")
        val = s ** ((2 - n) / 2.0)
        grad = (2 - n) * s ** (-n / 2.0) * d
        hess = (2 - n) * (s ** (-n / 2.0) * np.eye(n) - n * s ** (-n / 2.0 - 1) * np.outer(d, d))
        return _jet(val, grad, hess)

    def _values(self, Y):
        d = Y - self.pole
        s = np.sum(d * d, axis=1)
        if np.any(np.sqrt(s) < POLE_TOL):
            raise SingularPoint("fundamental solution evaluated at its pole")
        return s ** ((2 - self.dim) / 2.0)

    def describe(self):
        return f"fundamental({','.join(f'{v:g}' for v in self.pole)})"


class HarmonicPolynomial(ScalarField):
    """Polynomial ``offset + sum c_a y^a``; construction rejects ``Δp != 0``.

    ``terms`` maps exponent tuples to coefficients.  Such a field is positive
    only on a bounded region unless it is constant; positivity is checked at
    evaluation time.
    """

    def __init__(self, terms, dim, offset=0.0):
        self.dim = int(dim)
        merged = {}
        if offset:
            merged[(0,) * self.dim] = float(offset)
        for a, c in dict(terms).items():
            a = tuple(int(v) for v in a)
            if len(a) != self.dim or min(a, default=0) < 0:
                raise ValueError(f"bad exponent tuple {a} for dim {self.dim}")
            merged[a] = merged.get(a, 0.0) + float(c)
        self.terms = {a: c for a, c in merged.items() if c != 0.0}
        lap = self._laplacian_terms()
        scale = max([1.0] + [abs(c) for c in self.terms.values()])
        bad = {a: c for a, c in lap.items() if abs(c) > 1e-12 * scale}
        if bad:
            raise ValueError(f"polynomial is not harmonic: Laplacian has terms {bad}")
        self._exps = np.array(list(self.terms), dtype=int).reshape(-1, self.dim)
        self._coefs = np.array(list(self.terms.values()), dtype=float)

    def _laplacian_terms(self):
        out = {}
        for a, c in self.terms.items():
            for i, ai in enumerate(a):
                if ai >= 2:
                    b = list(a)
                    b[i] -= 2
                    b = tuple(b)
                    out[b] = out.get(b, 0.0) + c * ai * (ai - 1)
        return out

    @classmethod
    def parse(cls, text, dim):
        """Parse sums like ``"10 + y1*y2 - 0.5*y1^2 + 0.5*y3^2"``."""
        terms = {}
        src = text.replace(" ", "").replace("**", "^")
        if not src:
            raise ValueError("empty polynomial")
        for sign, body in re.findall(r"([+-]?)([^+-]+)", src):
            coef = -1.0 if sign == "-" else 1.0
            exps = [0] * dim
            for factor in body.split("*"):
                m = re.fullmatch(r"y(\d+)(?:\^(\d+))?", factor)
                if m:
                    i = int(m.group(1)) - 1
                    if not 0 <= i < dim:
                        raise ValueError(f"variable y{i + 1} out of range for dim {dim}")
                    exps[i] += int(m.group(2) or 1)
                else:
                    try:
                        coef *= float(factor)
                    except ValueError:
                        raise ValueError(f"cannot parse polynomial factor {factor!r}") from None
            key = tuple(exps)
            terms[key] = terms.get(key, 0.0) + coef
        return cls(terms, dim)

    def _jet(self, y):
        n = self.dim
        val = 0.0
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        for a, c in self.terms.items():
            val += c * _mono(y, a)
            for i in range(n):
                if a[i] == 0:
                    continue
                ai = list(a)
                ai[i] -= 1
                grad[i] += c * a[i] * _mono(y, ai)
                for j in range(n):
                    if ai[j] == 0:
                        continue
                    aij = list(ai)
                    aij[j] -= 1
                    hess[i, j] += c * a[i] * ai[j] * _mono(y, aij)
        return _jet(val, grad, hess)

    def _values(self, Y):
        mon = np.prod(Y[:, None, :] ** self._exps[None, :, :], axis=2)
        return mon @ self._coefs

    def describe(self):
        parts = []
        for a, c in self.terms.items():
            mono = "*".join(
                f"y{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(a) if e
            )
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return "harmonic(" + " + ".join(parts) + ")"


def _mono(y, a):
    out = 1.0
    for yi, ai in zip(y, a):
        if ai:
            out *= yi**ai
    return out


class QuadraticField(ScalarField):
    """``c0 + g·y + ½ yᵀHy``; mostly used to build ``w`` directly when n = 2."""

    def __init__(self, c0, g, H):
        self.g = np.ravel(np.asarray(g, dtype=float))
        self.dim = len(self.g)
        H = np.asarray(H, dtype=float)
        if H.shape != (self.dim, self.dim):
            raise DimensionMismatch("Hessian shape does not match gradient")
        self.H = 0.5 * (H + H.T)
        self.c0 = float(c0)

    def _jet(self, y):
        return _jet(self.c0 + self.g @ y + 0.5 * y @ self.H @ y, self.g + self.H @ y, self.H)

    def _values(self, Y):
        return self.c0 + Y @ self.g + 0.5 * np.einsum("mi,ij,mj->m", Y, self.H, Y)

    def describe(self):
        return "quadratic"


class Scaled(ScalarField):
    """``c * base`` for a positive constant ``c``."""

    def __init__(self, base, c):
        if not c > 0:
            raise NonPositiveValue("scale factor must be positive")
        self.base = base
        self.c = float(c)
        self.dim = base.dim

    def _jet(self, y):
        j = self.base.jet(y)
        return Jet2(self.c * j.value, self.c * j.gradient, self.c * j.hessian)

    def _values(self, Y):
        return self.c * self.base.values(Y)

    def describe(self):
        return f"{self.c:g}*{self.base.describe()}"


class Kelvin(ScalarField):
    """``u_{x,λ}(y) = (λ/|y-x|)^(n-2) u(x + λ²(y-x)/|y-x|²)``, straight from the formula."""

    def __init__(self, base, x, lam):
        if not lam > 0:
            raise ValueError("Kelvin radius must be positive")
        self.base = base
        self.dim = base.dim
        self.x = np.ravel(np.asarray(x, dtype=float))
        if len(self.x) != self.dim:
            if len(self.x) == 1 and self.x[0] == 0:
                self.x = np.zeros(self.dim)
            else:
                raise DimensionMismatch("Kelvin center does not match field dimension")
        self.lam = float(lam)

    def _jet(self, y):
        n, lam = self.dim, self.lam
        d = y - self.x
        s = d @ d
        if math.sqrt(s) < POLE_TOL:
            raise SingularPoint("Kelvin transform evaluated at its center")
        l2 = lam * lam
        eye = np.eye(n)
        k = self.x + l2 * d / s
        Dk = l2 * (eye / s - 2.0 * np.outer(d, d) / (s * s))
        # d^2/dy_j dy_l of d_i/s
        D2k = np.empty((n, n, n))
        for i in range(n):
            for j in range(n):
                for m in range(n):
                    D2k[i, j, m] = l2 * (
                        -2.0 * ((i == m) * d[j] + (i == j) * d[m] + (j == m) * d[i]) / (s * s)
                        + 8.0 * d[i] * d[j] * d[m] / (s * s * s)
                    )
        inner = _pullback(self.base.jet(k), Dk, D2k)
        e = (n - 2) / 2.0
        w = lam ** (n - 2)
        factor = _jet(
            w * s**-e,
            -2 * e * w * s ** (-e - 1) * d,
            -2 * e * w * (s ** (-e - 1) * eye - 2 * (e + 1) * s ** (-e - 2) * np.outer(d, d)),
        )
        return _product(factor, inner)

    def _values(self, Y):
        d = Y - self.x
        s = np.sum(d * d, axis=1)
        if np.any(np.sqrt(s) < POLE_TOL):
            raise SingularPoint("Kelvin transform evaluated at its center")
        k = self.x + self.lam**2 * d / s[:, None]
        return (self.lam**2 / s) ** ((self.dim - 2) / 2.0) * self.base.values(k)

    def describe(self):
        return f"kelvin({self.base.describe()}; x={self.x.tolist()}, lambda={self.lam:g})"


def kelvin_transform(field, x, lam):
    return Kelvin(field, x, lam)


class Pushforward(ScalarField):
    """``u_ψ = |J_ψ|^((n-2)/(2n)) (u ∘ ψ)``.

    With this convention ``pushforward(pushforward(u, g), f)`` equals
    ``pushforward(u, compose(g, f))``.
    """

    def __init__(self, base, psi):
        if psi.dim != base.dim:
            raise DimensionMismatch("map and field dimensions differ")
        self.base = base
        self.psi = psi
        self.dim = base.dim
        self.alpha = (self.dim - 2) / (2.0 * self.dim)

    def _jet(self, y):
        mj = mobius.propagate(self.psi, y)
        a = self.alpha
        F = math.exp(a * mj.log_det)
        factor = _jet(
            F,
            F * a * mj.log_det_grad,
            F * (a * mj.log_det_hess + a * a * np.outer(mj.log_det_grad, mj.log_det_grad)),
        )
        inner = _pullback(self.base.jet(mj.value), mj.jacobian, mj.second)
        return _product(factor, inner)

    def _values(self, Y):
        F = np.exp(self.alpha * mobius.log_jacobian_det_abs(self.psi, Y))
        return F * self.base.values(mobius.apply(self.psi, Y))

    def describe(self):
        return f"pushforward({self.base.describe()}; {self.psi!r})"


def pushforward(field, psi):
    return Pushforward(field, psi)


class WSubstitution(ScalarField):
    """``w = u^(-2/(n-2))``, so that ``u = w^(-(n-2)/2)``."""

    def __init__(self, base):
        if base.dim < 3:
            raise DimensionTooSmall("w substitution needs n >= 3; build w directly for n = 2")
        self.base = base
        self.dim = base.dim
        self.p = -2.0 / (self.dim - 2)

    def _jet(self, y):
        return _power(self.base.jet(y), self.p)

    def _values(self, Y):
        return self.base.values(Y) ** self.p

    def describe(self):
        return f"w({self.base.describe()})"


def w_substitution(field):
    return WSubstitution(field)


class GridField(ScalarField):
    """Samples on a uniform lattice ``origin + h * index``.

    Queries must land on lattice points (no interpolation).  Jets use
    second-order central differences and need two cells of margin.
    """

    LATTICE_TOL = 1e-8

    def __init__(self, samples, spacing, origin=None):
        samples = np.array(samples, dtype=float)
        if samples.ndim < 1:
            raise ValueError("grid needs at least one axis")
        if not spacing > 0:
            raise ValueError("grid spacing must be positive")
        if min(samples.shape) < 5:
            raise ValueError("grid needs at least 5 points per axis")
        if not np.all(np.isfinite(samples)):
            raise ValueError("grid samples must be finite")
        if not np.all(samples > 0):
            idx = np.unravel_index(int(np.argmin(samples)), samples.shape)
            raise NonPositiveValue(f"grid sample {samples[idx]!r} at index {tuple(map(int, idx))}")
        self.samples = samples
        self.samples.setflags(write=False)
        self.h = float(spacing)
        self.dim = samples.ndim
        self.shape = samples.shape
        self.origin = (
            np.zeros(self.dim) if origin is None else np.ravel(np.asarray(origin, dtype=float))
        )
        if len(self.origin) != self.dim:
            raise DimensionMismatch("origin does not match sample dimensions")

    @classmethod
    def sample(cls, fn, origin, spacing, shape):
        """Grid of ``fn`` (a field or a batch callable) on the given lattice."""
        origin = np.ravel(np.asarray(origin, dtype=float))
        pts = lattice_points(origin, spacing, shape)
        f = fn.values if isinstance(fn, ScalarField) else fn
        return cls(np.asarray(f(pts)).reshape(shape), spacing, origin)

    def points(self):
        return lattice_points(self.origin, self.h, self.shape)

    def same_lattice(self, other):
        return (
            self.shape == other.shape
            and abs(self.h - other.h) <= 1e-12 * self.h
            and np.allclose(self.origin, other.origin, rtol=0, atol=1e-12 * max(1.0, self.h))
        )

    def index_of(self, Y):
        """Integer lattice indices for a batch of points; raises off-lattice."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        k = (Y - self.origin) / self.h
        r = np.rint(k)
        if np.any(np.abs(k - r) > self.LATTICE_TOL * np.maximum(1.0, np.abs(k))):
            raise OutOfDomain("grid fields accept lattice points only (no interpolation)")
        r = r.astype(int)
        if np.any(r < 0) or np.any(r >= np.array(self.shape)):
            raise OutOfDomain("point lies outside the grid")
        return r

    def _values(self, Y):
        idx = self.index_of(Y)
        return self.samples[tuple(idx.T)]

    def _jet(self, y):
        i = self.index_of(y)[0]
        if np.any(i < 2) or np.any(i > np.array(self.shape) - 3):
            raise OutOfDomain("grid jets need two cells of margin from the boundary")
        n, h, u = self.dim, self.h, self.samples

        def at(*shifts):
            j = i.copy()
            for axis, step in shifts:
                j[axis] += step
            return u[tuple(j)]

        c = u[tuple(i)]
        grad = np.empty(n)
        hess = np.empty((n, n))
        for a in range(n):
            grad[a] = (at((a, 1)) - at((a, -1))) / (2 * h)
            hess[a, a] = (at((a, 1)) - 2 * c + at((a, -1))) / (h * h)
            for b in range(a + 1, n):
                hess[a, b] = hess[b, a] = (
                    at((a, 1), (b, 1)) - at((a, 1), (b, -1)) - at((a, -1), (b, 1)) + at((a, -1), (b, -1))
                ) / (4 * h * h)
        return _jet(c, grad, hess)

    def describe(self):
        return f"grid({'x'.join(map(str, self.shape))}, h={self.h:g})"

    def save(self, path):
        save_grid(self, path)

    @classmethod
    def load(cls, path):
        return load_grid(path)


def lattice_points(origin, spacing, shape):
    axes = [origin[a] + spacing * np.arange(shape[a]) for a in range(len(shape))]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


GRID_MAGIC = "# confspheres grid v1"


def save_grid(grid, path):
    """Write the text grid format (header, then row-major samples)."""
    lines = [
        GRID_MAGIC,
        f"dim {grid.dim}",
        "shape " + " ".join(str(s) for s in grid.shape),
        f"spacing {grid.h!r}",
        "origin " + " ".join(repr(float(v)) for v in grid.origin),
        "data",
    ]
    flat = grid.samples.reshape(grid.shape[0], -1) if grid.dim > 1 else grid.samples[:, None]
    lines.extend(" ".join(f"{v:.17g}" for v in row) for row in flat)
    Path(path).write_text("\n".join(lines) + "\n")


def load_grid(path):
    """Parse a grid file.

    Header keys (one per line, any order, ``#`` comments allowed): ``dim``,
    ``shape``, ``spacing``, ``origin``; then a line ``data`` followed by the
    samples in row-major order, whitespace separated.
    """
    header = {}
    values = []
    in_data = False
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if in_data:
            for tok in line.split():
                try:
                    v = float(tok)
                except ValueError:
                    raise GridFormatError(f"bad sample {tok!r}", lineno) from None
                if not (v > 0 and math.isfinite(v)):
                    raise GridFormatError(f"non-positive or non-finite sample {tok}", lineno)
                values.append(v)
            continue
        key, _, rest = line.partition(" ")
        if key == "data":
            in_data = True
            continue
        if key not in ("dim", "shape", "spacing", "origin"):
            raise GridFormatError(f"unknown header key {key!r}", lineno)
        try:
            nums = [float(t) for t in rest.split()]
        except ValueError:
            raise GridFormatError(f"bad number in {key!r} line", lineno) from None
        header[key] = (nums, lineno)

    for key in ("dim", "shape", "spacing"):
        if key not in header:
            raise GridFormatError(f"missing header key {key!r}")
    dim = int(header["dim"][0][0])
    shape = tuple(int(v) for v in header["shape"][0])
    if len(shape) != dim:
        raise GridFormatError("shape length does not match dim", header["shape"][1])
    if any(s < 5 for s in shape):
        raise GridFormatError("need at least 5 points per axis", header["shape"][1])
    spacing = header["spacing"][0][0]
    if not spacing > 0:
        raise GridFormatError("spacing must be positive", header["spacing"][1])
    origin = header.get("origin", ([0.0] * dim, None))[0]
    if len(origin) != dim:
        raise GridFormatError("origin length does not match dim", header["origin"][1])
    if not in_data:
        raise GridFormatError("missing 'data' section")
    if len(values) != int(np.prod(shape)):
        raise GridFormatError(f"expected {int(np.prod(shape))} samples, found {len(values)}")
    return GridField(np.array(values).reshape(shape), spacing, origin)
