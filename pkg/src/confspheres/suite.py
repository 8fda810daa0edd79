"""The verification battery run by ``confspheres suite``.

Every check is deterministic (Kronecker/Halton point sets, no random
generator) and returns a :class:`CheckResult` comparing one measured number
with its tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import conformal, mobius, spheres, viscosity
from .cones import ConeSpec
from .errors import ConfSpheresError
from .fields import Bubble, Constant, FundamentalSolution, HarmonicPolynomial
from .sampling import KroneckerStream, annulus_points

DEFAULT_TOLERANCES = {
    "path_equivalence": 1e-8,
    "invariance": 1e-6,
    "trace_identity": 1e-10,
    "bubble_spectrum": 1e-8,
    "fundamental_solution": 1e-9,
    "moving_spheres": 1e-3,
    "start_radius_contract": 1e-12,
    "constant_gap_constant": 1e-6,
    "kelvin_involution": 1e-10,
    "decay_proxy": 1e-4,
    "discrete_comparison": 0.0,
    "viscosity_negative_control": 0.0,
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    tol: float
    detail: str = ""

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name:<28} measured={self.measured:.6g}  tol={self.tol:.3g}  {self.detail}".rstrip()


def builtin_fields(n=3):
    """The closed-form family used across checks (all positive on the test region)."""
    return [
        Constant(5.0, n),
        Bubble(np.zeros(n)),
        Bubble(0.5 * np.ones(n)),
        FundamentalSolution(np.zeros(n)),
        HarmonicPolynomial.parse("10 + y1*y2", n),
    ]


def _points(stream, m, n, lo=-1.0, hi=1.0, avoid=0.3):
    out = []
    while len(out) < m:
        y = stream.uniform(lo, hi, n)
        if np.linalg.norm(y) >= avoid:
            out.append(y)
    return np.array(out)


def check_path_equivalence(tol):
    stream = KroneckerStream(start=11)
    pts = _points(stream, 50, 3)
    worst = 0.0
    for u in builtin_fields():
        for y in pts:
            worst = max(worst, conformal.cross_check(u, y))
    bad = conformal.Coefficients.standard(3).perturbed(outer=1e-3)
    control = max(conformal.cross_check(Bubble(np.zeros(3)), y, bad) for y in pts)
    ok = worst <= tol and control > tol
    return CheckResult("path_equivalence", ok, worst, tol, f"negative_control={control:.3g}")


def _word(stream, n, length):
    word = []
    for _ in range(length):
        kind = int(stream.next() * 3)
        if kind == 0:
            word.append(mobius.Translation(stream.uniform(-1.5, 1.5, n)))
        elif kind == 1:
            a = math.exp(stream.uniform(math.log(0.5), math.log(2.0)))
            word.append(mobius.Scaling(a if stream.next() < 0.7 else -a))
        else:
            word.append(mobius.Inversion())
    return mobius.MobiusMap(word, n)


def _margin_ok(psi, u, y, margin):
    z = np.asarray(y, dtype=float)
    for g in reversed(psi.word):
        if isinstance(g, mobius.Inversion) and np.linalg.norm(z) < margin:
            return False
        z = mobius.apply(mobius.MobiusMap((g,), psi.dim), z)
    if isinstance(u, FundamentalSolution) and np.linalg.norm(z - u.pole) < margin:
        return False
    if isinstance(u, HarmonicPolynomial) and not u._values(z[None, :])[0] > margin:
        return False
    return bool(np.all(np.abs(z) < 1e3))


def invariance_trials(fields, trials, word_length=4, n=3, margin=0.1, coeffs=None, start=1):
    """Residuals of the eigenvalue-level invariance over deterministic trials."""
    stream = KroneckerStream(start=start)
    out = []
    k = 0
    while len(out) < trials:
        u = fields[k % len(fields)]
        length = 1 + int(stream.next() * word_length)
        psi = _word(stream, n, length)
        y = stream.uniform(-2.0, 2.0, n)
        if not _margin_ok(psi, u, y, margin):
            continue
        if isinstance(u, FundamentalSolution) and np.linalg.norm(y - u.pole) < margin:
            continue
        try:
            out.append(conformal.invariance_residual(u, psi, y, coeffs))
        except ConfSpheresError:
            continue
        k += 1
    return out


def check_invariance(tol, trials=100, coeffs=None):
    res = invariance_trials(builtin_fields(), trials, coeffs=coeffs)
    worst = max(res)
    return CheckResult("invariance", worst <= tol, worst, tol, f"trials={len(res)}")


def _a_u_scale(jet):
    n = jet.dim
    c = conformal.Coefficients.standard(n)
    g2 = float(jet.gradient @ jet.gradient)
    return (
        abs(c.hess) * jet.value**c.hess_exp * np.linalg.norm(jet.hessian)
        + (abs(c.outer) + n * abs(c.trace)) * jet.value**c.grad_exp * g2
    )


def check_trace_identity(tol):
    stream = KroneckerStream(start=23)
    pts = _points(stream, 50, 3, -0.9, 0.9)
    worst = 0.0
    for u in (Constant(5.0, 3), FundamentalSolution(np.zeros(3)), HarmonicPolynomial.parse("10 + y1*y2", 3)):
        for y in pts:
            ev = conformal.conformal_hessian(u, y)
            scale = max(1.0, _a_u_scale(u.jet(y)))
            worst = max(worst, abs(ev.sigmas[0]) / scale)
    b = conformal.conformal_hessian(Bubble(np.zeros(3)), np.zeros(3))
    bubble_err = abs(float(np.trace(b.matrix)) - 6.0) / 6.0
    worst = max(worst, bubble_err)
    return CheckResult("trace_identity", worst <= tol, worst, tol)


def check_bubble_spectrum(tol):
    stream = KroneckerStream(start=31)
    pts = stream.uniform(-3.0, 3.0, (50, 3))
    u = Bubble(np.zeros(3))
    worst = max(float(np.max(np.abs(conformal.conformal_hessian(u, y).eigenvalues - 2.0))) for y in pts)
    return CheckResult("bubble_spectrum", worst <= tol, worst, tol)


def check_fundamental_solution(tol):
    u = FundamentalSolution(np.zeros(3))
    pts = annulus_points(3, 50, 0.5, 3.0)
    worst = max(float(np.max(np.abs(conformal.conformal_hessian(u, y).eigenvalues))) for y in pts)
    rep = viscosity.certify(u, pts, ConeSpec.gamma(1, 3), (0.0, 1e-4, 1e-2))
    ok = worst <= tol and rep.subsolution and rep.supersolution
    return CheckResult(
        "fundamental_solution", ok, worst, tol,
        f"sub={rep.subsolution} super={rep.supersolution}",
    )


def check_moving_spheres(tol):
    u = Bubble(np.zeros(3))
    worst = 0.0
    for x in ((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 2.0, 0.0)):
        cfg = spheres.SphereSweepConfig(x, 0.0, 10.0, 50.0, bisect_tol=1e-4)
        rep = spheres.critical_lambda(u, cfg)
        if rep.censored:
            return CheckResult("moving_spheres", False, math.inf, tol, f"censored at {x}")
        worst = max(worst, abs(rep.lambda_bar - math.sqrt(1.0 + float(np.dot(x, x)))))
    return CheckResult("moving_spheres", worst <= tol, worst, tol)


def sweep_fields(n=3):
    """Builtins that are positive and smooth on the balls used by the sweep."""
    far = np.zeros(n)
    far[0] = 100.0
    return [
        Constant(2.0, n),
        Bubble(np.zeros(n)),
        Bubble(0.5 * np.ones(n)),
        FundamentalSolution(far),
        HarmonicPolynomial.parse("1 + 0.001*y1*y2", n),
    ]


def check_start_radius(tol, centers=5):
    stream = KroneckerStream(start=41)
    worst = 0.0
    for u in sweep_fields():
        for _ in range(centers):
            x = stream.uniform(-2.0, 2.0, 3)
            cfg = spheres.SphereSweepConfig(x, 0.0, 10.0, 20.0)
            lam0 = spheres.start_lambda(u, x, cfg)
            for lam in np.linspace(lam0 / 40, lam0, 20, endpoint=False):
                gap, _ = spheres.sweep_min_gap(u, x, lam, 0.0, cfg)
                worst = min(worst, gap)
    return CheckResult("start_radius_contract", worst >= -tol, worst, tol, "min gap >= -tol")


def check_constant_gap_constant(tol, c=3.0):
    u = Constant(c, 3)
    cfg = spheres.SphereSweepConfig((0.0, 0.0, 0.0), 0.1, 100.0, 200.0)
    rep = spheres.critical_lambda(u, cfg)
    cfg1 = spheres.SphereSweepConfig((0.0, 0.0, 0.0), 0.1, 10.0, 100.0)
    c_hat, _ = spheres.lemma2_gap_check(u, np.zeros(3), 0.1, 1.0, cfg1)
    rel = abs(c_hat - 0.1 * c) / (0.1 * c)
    ok = rep.censored and rep.lambda_bar.bound == 100.0 and rel <= tol
    return CheckResult("constant_gap_constant", ok, rel, tol, f"lambda_bar={rep.lambda_bar_text()}")


def check_kelvin_involution(tol):
    stream = KroneckerStream(start=53)
    worst = 0.0
    centers = (np.zeros(3), np.array([1.0, 0.0, 0.0]), np.array([-0.5, 0.7, 0.2]))
    for u in builtin_fields():
        for x in centers:
            pts = x + annulus_points(3, 100, 0.5, 3.0)
            pts = np.array([p for p in pts if _involution_safe(u, x, p)])
            worst = max(worst, spheres.involution_residual(u, x, 1.0 + stream.next(), pts))
    return CheckResult("kelvin_involution", worst <= tol, worst, tol)


def _involution_safe(u, x, y):
    if isinstance(u, FundamentalSolution):
        return np.linalg.norm(y - u.pole) > 0.1
    if isinstance(u, HarmonicPolynomial):
        return u._values(y[None, :])[0] > 0.1
    return True


def check_decay_proxy(tol):
    b = Bubble(np.zeros(3))
    radii = [1.0, 3.0, 10.0, 30.0, 100.0]
    vals = viscosity.decay_lower_bound(b, radii, 2000)
    err10 = abs(vals[2] - 0.99504)
    increasing = all(a < c for a, c in zip(vals, vals[1:]))
    fvals = viscosity.decay_lower_bound(FundamentalSolution(np.zeros(3)), radii, 2000)
    ferr = max(abs(v - 1.0) for v in fvals)
    ok = err10 <= tol and increasing and ferr <= 1e-12
    return CheckResult(
        "decay_proxy", ok, err10, tol, f"increasing={increasing} fundamental_err={ferr:.2g}"
    )


def random_harmonic_pair(stream, shape=(21, 21, 21), h=0.05):
    """Discrete-harmonic ``u > v`` on the boundary, from positive boundary data."""
    st = viscosity.lattice_stencil(shape)
    nb = len(st.boundary)
    base = np.zeros(int(np.prod(shape)))
    gap = np.zeros_like(base)
    base[st.boundary] = stream.uniform(0.5, 2.0, nb)
    gap[st.boundary] = stream.uniform(0.01, 1.0, nb)
    v = viscosity.discrete_harmonic(base.reshape(shape), h)
    u = viscosity.discrete_harmonic((base + gap).reshape(shape), h)
    return u, v


def check_discrete_comparison(trials=50):
    stream = KroneckerStream(start=61)
    worst = math.inf
    hyp = True
    shape = (21, 21, 21)
    puncture = np.array([10, 10, 10]) * 0.05
    for _ in range(trials):
        u, v = random_harmonic_pair(stream, shape)
        rep = viscosity.discrete_comparison(u, v, puncture, tol=1e-6)
        hyp &= rep.hypotheses_ok
        worst = min(worst, rep.min_gap)
    ok = hyp and worst > 0
    return CheckResult("discrete_comparison", ok, worst, 0.0, f"hypotheses={hyp} trials={trials}")


def check_viscosity_negative_control():
    u = Bubble(np.zeros(3))
    stream = KroneckerStream(start=71)
    pts = stream.uniform(-2.0, 2.0, (20, 3))
    rep = viscosity.certify(u, pts, ConeSpec.gamma(1, 3), (0.0,))
    fails = sum(not r.subsolution_ok for r in rep.records)
    supers = sum(r.supersolution_ok for r in rep.records)
    ok = fails == len(pts) and supers == len(pts)
    return CheckResult(
        "viscosity_negative_control", ok, float(fails), float(len(pts)),
        f"subsolution_failures={fails}/{len(pts)} supersolution_passes={supers}/{len(pts)}",
    )


def run_suite(tolerances=None, coeffs=None):
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    return [
        check_path_equivalence(tol["path_equivalence"]),
        check_invariance(tol["invariance"], coeffs=coeffs),
        check_trace_identity(tol["trace_identity"]),
        check_bubble_spectrum(tol["bubble_spectrum"]),
        check_fundamental_solution(tol["fundamental_solution"]),
        check_moving_spheres(tol["moving_spheres"]),
        check_start_radius(tol["start_radius_contract"]),
        check_constant_gap_constant(tol["constant_gap_constant"]),
        check_kelvin_involution(tol["kelvin_involution"]),
        check_decay_proxy(tol["decay_proxy"]),
        check_discrete_comparison(),
        check_viscosity_negative_control(),
    ]
