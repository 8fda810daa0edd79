"""Moving spheres on a truncated annulus.

For a center ``x`` and radius ``λ`` the engine compares ``(1+δ) u`` with the
Kelvin transform ``u_{x,λ}`` on ``λ <= |y-x| <= R``.  The unbounded domain of
the continuum statement is replaced by the outer radius ``R`` and the
supremum over ``λ`` is censored at ``Λ`` (``lambda_max``); both appear in
every report.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, MonotonicityNotFound, OutOfDomain
from .fields import GridField, Kelvin
from .sampling import sphere_points

GRID_POINTS = 64
BISECT_MAX = 200


@dataclass(frozen=True)
class SphereSweepConfig:
    center: tuple
    delta: float = 0.0
    lambda_max: float = 10.0
    outer_radius: float = 50.0
    radial_samples: int = 64
    angular_samples: int = 256
    bisect_tol: float = 1e-4
    gap_tol: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.ravel(self.center)))
        if not self.lambda_max > 0:
            raise ConfigError("lambda_max must be positive")
        if not self.lambda_max < self.outer_radius:
            raise ConfigError(
                f"lambda_max ({self.lambda_max}) must be below outer_radius ({self.outer_radius})"
            )
        if not 0 <= self.delta < 1:
            raise ConfigError("delta must lie in [0, 1)")
        if self.radial_samples < 16 or self.angular_samples < 16:
            raise ConfigError("radial_samples and angular_samples must be at least 16")
        if not self.bisect_tol > 0:
            raise ConfigError("bisect_tol must be positive")

    @property
    def x(self):
        return np.array(self.center)

    def with_center(self, center):
        return replace(self, center=center)

    def with_delta(self, delta):
        return replace(self, delta=delta)


@dataclass(frozen=True)
class Censored:
    """No failure of the comparison found for any ``λ <= bound``."""

    bound: float

    def __str__(self):
        return f"CENSORED({self.bound:g})"


@dataclass(frozen=True)
class SphereSweepReport:
    center: tuple
    delta: float
    lambda_start: float
    lambda_bar: object  # float, or Censored
    lambda_max: float
    outer_radius: float
    witness: np.ndarray | None
    min_gap_profile: tuple = field(default=())
    contract_violation: bool = False

    @property
    def censored(self):
        return isinstance(self.lambda_bar, Censored)

    def lambda_bar_text(self):
        if self.censored:
            return str(self.lambda_bar)
        return f"{self.lambda_bar:.17g}"


def _directions(n, m):
    return sphere_points(n, m)


def annulus_sample(x, lam, cfg, n):
    """Log-spaced radii in ``[lam, R]`` times quasi-uniform directions.

    Rows are ordered radius-major, so ``argmin`` tie-breaks toward the
    smallest radius, then the smallest direction index.
    """
    radii = np.geomspace(lam, cfg.outer_radius, cfg.radial_samples)
    dirs = _directions(n, cfg.angular_samples)
    pts = x + (radii[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    return pts, np.repeat(radii, len(dirs))


def _require_closed_form(u):
    if isinstance(u, GridField):
        raise OutOfDomain("grid fields cannot be swept: Kelvin arguments leave the lattice")


def _gap_values(u, x, lam, delta, pts):
    return (1.0 + delta) * u.values(pts) - Kelvin(u, x, lam).values(pts)


def sweep_min_gap(u, x, lam, delta, cfg):
    """``min (1+δ)u(y) - u_{x,λ}(y)`` over the annulus sample, and its argmin."""
    _require_closed_form(u)
    if lam > cfg.lambda_max:
        raise ConfigError(f"lambda {lam} exceeds lambda_max {cfg.lambda_max}")
    if not lam > 0:
        raise ConfigError("lambda must be positive")
    x = np.ravel(np.asarray(x, dtype=float))
    pts, _ = annulus_sample(x, lam, cfg, u.dim)
    gap = _gap_values(u, x, lam, delta, pts)
    k = int(np.argmin(gap))
    return float(gap[k]), pts[k]


def _negative(gap, cfg, scale=1.0):
    return gap < -cfg.gap_tol * max(1.0, scale)


def start_lambda(u, x, cfg, details=False):
    """Radius below which ``u_{x,λ} <= u`` on the truncated annulus.

    ``r0`` is the largest sampled radius (capped at ``lambda_max``) up to
    which ``r^((n-2)/2) u(x + rθ)`` increases strictly along every sampled
    ray; ``c`` is the smallest sampled ``|y-x|^(n-2) u(y)`` with
    ``r0 <= |y-x| <= R``; the result is ``(c / max_{|z-x|<=r0} u)^(1/(n-2))``.
    """
    _require_closed_form(u)
    n = u.dim
    if n < 3:
        raise ConfigError("start_lambda needs n >= 3")
    x = np.ravel(np.asarray(x, dtype=float))
    R = cfg.outer_radius
    radii = np.geomspace(R * 1e-4, R, 4 * cfg.radial_samples)
    dirs = _directions(n, cfg.angular_samples)
    pts = x + (radii[:, None, None] * dirs[None, :, :])
    vals = u.values(pts.reshape(-1, n)).reshape(len(radii), len(dirs))

    weighted = radii[:, None] ** ((n - 2) / 2.0) * vals
    inc = np.all(np.diff(weighted, axis=0) > 0, axis=1)
    if not inc[0]:
        raise MonotonicityNotFound("r^((n-2)/2) u is not increasing near the center at this resolution")
    stop = len(inc) if inc.all() else int(np.argmin(inc))
    i0 = stop  # radii[0..i0] strictly increasing along every ray
    i0 = min(i0, int(np.searchsorted(radii, cfg.lambda_max, side="right")) - 1)
    if i0 < 1:
        raise MonotonicityNotFound("no monotone radius below lambda_max")
    r0 = float(radii[i0])

    c = float(np.min(radii[i0:, None] ** (n - 2) * vals[i0:]))
    umax = max(float(np.max(vals[: i0 + 1])), u.value(x))
    lam0 = (c / umax) ** (1.0 / (n - 2))
    if details:
        return lam0, {"r0": r0, "c": c, "max_u": umax}
    return lam0


def critical_lambda(u, cfg, lambda_start=None):
    """First radius where ``u_{x,λ} <= (1+δ) u`` fails, or :class:`Censored`.

    A geometric grid of 64 radii from ``λ0/4`` to ``Λ`` is scanned; the first
    sign change is refined by bisection to ``bisect_tol`` and the lower end
    of the final bracket is reported (a conservative underestimate).
    """
    _require_closed_form(u)
    x = cfg.x
    lam0 = start_lambda(u, x, cfg) if lambda_start is None else float(lambda_start)
    lo_grid = min(lam0 / 4.0, cfg.lambda_max)
    grid = np.geomspace(lo_grid, cfg.lambda_max, GRID_POINTS)
    scale = float(np.max(u.values(annulus_sample(x, lo_grid, cfg, u.dim)[0])))

    profile = []
    first_bad = None
    witness = None
    for lam in grid:
        gap, arg = sweep_min_gap(u, x, lam, cfg.delta, cfg)
        profile.append((float(lam), gap))
        if first_bad is None and _negative(gap, cfg, scale):
            first_bad = len(profile) - 1
            witness = arg

    violation = any(lam < lam0 and _negative(g, cfg, scale) for lam, g in profile)
    if first_bad is None:
        return SphereSweepReport(
            cfg.center, cfg.delta, lam0, Censored(cfg.lambda_max), cfg.lambda_max,
            cfg.outer_radius, None, tuple(profile), violation,
        )

    hi = grid[first_bad]
    lo = grid[first_bad - 1] if first_bad > 0 else 0.0
    for _ in range(BISECT_MAX):
        if hi - lo <= cfg.bisect_tol:
            break
        mid = 0.5 * (lo + hi)
        gap, arg = sweep_min_gap(u, x, mid, cfg.delta, cfg)
        if _negative(gap, cfg, scale):
            hi, witness = mid, arg
        else:
            lo = mid
    return SphereSweepReport(
        cfg.center, cfg.delta, lam0, float(lo), cfg.lambda_max, cfg.outer_radius,
        witness, tuple(profile), violation,
    )


def involution_residual(u, x, lam, sample):
    """``max |(u_{x,λ})_{x,λ}(y) - u(y)| / u(y)`` over ``sample``."""
    _require_closed_form(u)
    pts = np.atleast_2d(np.asarray(sample, dtype=float))
    twice = Kelvin(Kelvin(u, x, lam), x, lam)
    base = u.values(pts)
    return float(np.max(np.abs(twice.values(pts) - base) / base))


def lemma2_gap_check(u, x, delta, lambda_bar, cfg):
    """``(c_hat, worst_ratio)`` on the annulus ``λ̄ <= |y-x| <= R``.

    ``c_hat = min [(1+δ)u - u_{x,λ̄}] |y-x|^(n-2)`` is the constant in the
    quantitative gap ``(1+δ)u - u_{λ̄} >= c |y-x|^(2-n)``;
    ``worst_ratio = min (1+δ)u / u_{x,λ̄} - 1`` is negative exactly when the
    inequality fails somewhere on the sample.
    """
    _require_closed_form(u)
    x = np.ravel(np.asarray(x, dtype=float))
    n = u.dim
    pts, radii = annulus_sample(x, lambda_bar, cfg, n)
    lhs = (1.0 + delta) * u.values(pts)
    kel = Kelvin(u, x, lambda_bar).values(pts)
    c_hat = float(np.min((lhs - kel) * radii ** (n - 2)))
    worst = float(np.min(lhs / kel) - 1.0)
    return c_hat, worst


def constancy_gap(u, sample, origin=None):
    """``max |u(y) - u(0)|`` over ``sample``."""
    pts = np.atleast_2d(np.asarray(sample, dtype=float))
    o = np.zeros(u.dim) if origin is None else np.asarray(origin, dtype=float)
    return float(np.max(np.abs(u.values(pts) - u.value(o))))
