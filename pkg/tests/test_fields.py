import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confspheres.errors import (
    DimensionMismatch,
    DimensionTooSmall,
    NonPositiveValue,
    OutOfDomain,
    SingularPoint,
)
from confspheres.fields import (
    Bubble,
    Constant,
    FundamentalSolution,
    GridField,
    HarmonicPolynomial,
    Kelvin,
    QuadraticField,
    Scaled,
    eval_jet,
    kelvin_transform,
    pushforward,
    w_substitution,
)
from confspheres.mobius import compose, inversion, kelvin_map, scaling, translation

from conftest import fd_hessian_from_gradient, fd_jet
from test_mobius import random_word, safe_point


def closed_form_fields():
    return [
        Constant(5.0, 3),
        Bubble(np.zeros(3)),
        Bubble(np.array([0.5, -0.2, 0.1])),
        FundamentalSolution(np.zeros(3)),
        HarmonicPolynomial.parse("10 + y1*y2", 3),
        HarmonicPolynomial.parse("4 + y1^2 - y3^2 + 0.5*y2", 3),
        Scaled(Bubble(np.zeros(3)), 2.5),
        Kelvin(Bubble(np.array([0.2, 0, 0])), np.array([0.1, 0.3, 0]), 1.3),
        pushforward(Bubble(np.zeros(3)), compose(translation([0.3, 0, 0]), scaling(1.5, 3))),
        w_substitution(Bubble(np.zeros(3))),
    ]


def test_eval_jet_examples():
    j = eval_jet(Constant(5, 3), [1, 2, 3])
    assert j.value == 5 and not j.gradient.any() and not j.hessian.any()
    assert FundamentalSolution(np.zeros(3)).value([2, 0, 0]) == pytest.approx(0.5)
    j = eval_jet(Bubble(np.zeros(3)), np.zeros(3))
    assert j.value == 1
    assert np.allclose(j.gradient, 0)
    assert np.allclose(j.hessian, -np.eye(3))
    f = lambda y: (1 + y @ y) ** -0.5
    _, g, H = fd_jet(f, np.zeros(3))
    assert np.allclose(H, j.hessian, atol=1e-6)


def test_finite_difference_consistency(rng):
    for u in closed_form_fields():
        for _ in range(50):
            y = rng.uniform(-1, 1, 3)
            if isinstance(u, FundamentalSolution) and np.linalg.norm(y) < 0.3:
                y = y + 0.5
            j = u.jet(y)
            v, g, _ = fd_jet(u.value, y, h=1e-5)
            assert j.value == pytest.approx(v, rel=1e-13)
            assert np.allclose(j.gradient, g, rtol=0, atol=1e-6), u.describe()
            H = fd_hessian_from_gradient(lambda z: u.jet(z).gradient, y, h=1e-5)
            assert np.allclose(j.hessian, H, rtol=0, atol=1e-6), u.describe()
            # value-only second differences: coarser step, looser bound (roundoff ~ eps/h²)
            _, _, H4 = fd_jet(u.value, y, h=1e-4)
            assert np.allclose(j.hessian, H4, rtol=0, atol=1e-5 * max(1.0, abs(j.value))), u.describe()
            assert np.allclose(j.hessian, j.hessian.T, atol=1e-12)


def test_values_match_jet_values(rng):
    for u in closed_form_fields():
        Y = rng.uniform(0.3, 1, (10, 3))
        assert np.allclose(u.values(Y), [u.jet(y).value for y in Y], rtol=1e-13)


def test_pushforward_examples(rng):
    u = pushforward(Constant(1.0, 3), inversion(3))
    assert u.value([2, 0, 0]) == pytest.approx(0.5, rel=1e-14)
    b = rng.uniform(-1, 1, 3)
    bub = Bubble(np.zeros(3))
    y = rng.uniform(-1, 1, 3)
    assert pushforward(bub, translation(b)).value(y) == pytest.approx(bub.value(y + b), rel=1e-15)
    g = pushforward(FundamentalSolution(np.zeros(3)), inversion(3))
    pts = rng.uniform(-3, 3, (100, 3))
    assert np.allclose(g.values(pts), 1.0, rtol=0, atol=1e-12)
    assert g.value([2, 0, 0]) == pytest.approx(1.0, abs=1e-12)


def test_pushforward_functoriality(rng):
    u = Bubble(np.array([0.3, 0.1, -0.2]))
    for _ in range(50):
        f = random_word(rng, 3, 2)
        g = random_word(rng, 3, 2)
        gf = compose(g, f)
        y = safe_point(gf, rng, 3, margin=0.2)
        lhs = pushforward(pushforward(u, g), f).value(y)
        rhs = pushforward(u, gf).value(y)
        assert lhs == pytest.approx(rhs, rel=1e-10)
        jl = pushforward(pushforward(u, g), f).jet(y)
        jr = pushforward(u, gf).jet(y)
        scale = max(1.0, np.abs(jr.hessian).max())
        assert np.allclose(jl.hessian, jr.hessian, rtol=0, atol=1e-8 * scale)


def test_kelvin_examples():
    c = 3.0
    u = Constant(c, 3)
    x = np.array([0.5, -1.0, 2.0])
    lam = 1.7
    d = np.array([1.0, 2.0, -2.0]) / 3.0
    assert kelvin_transform(u, x, lam).value(x + lam * d) == pytest.approx(c, rel=1e-15)
    b = Bubble(np.zeros(3))
    assert kelvin_transform(b, np.zeros(3), 1.0).value([3, 0, 0]) == pytest.approx(10**-0.5, rel=1e-15)
    assert kelvin_transform(u, np.zeros(3), 1.0).value([2, 0, 0]) == pytest.approx(c / 2)


def test_kelvin_direct_matches_pushforward_route(rng):
    for u in closed_form_fields()[:6]:
        for _ in range(10):
            x = rng.uniform(-1, 1, 3)
            lam = rng.uniform(0.5, 2.0)
            direct = Kelvin(u, x, lam)
            via = pushforward(u, kelvin_map(x, lam))
            y = x + rng.uniform(0.6, 2.0) * rng.normal(size=3) / np.sqrt(3)
            k = x + lam**2 * (y - x) / ((y - x) @ (y - x))
            if isinstance(u, FundamentalSolution) and np.linalg.norm(k) < 0.2:
                continue
            if isinstance(u, HarmonicPolynomial) and u._values(k[None, :])[0] < 0.5:
                continue
            jd, jv = direct.jet(y), via.jet(y)
            assert jd.value == pytest.approx(jv.value, rel=1e-12)
            assert np.allclose(jd.gradient, jv.gradient, rtol=1e-10, atol=1e-12)
            assert np.allclose(jd.hessian, jv.hessian, rtol=1e-9, atol=1e-11)


def test_kelvin_involution_on_random_points(rng):
    for u in [Constant(2.0, 3), Bubble(np.zeros(3)), Bubble(np.array([0.5, 0.5, 0.5]))]:
        x = rng.uniform(-1, 1, 3)
        lam = rng.uniform(0.5, 2)
        twice = Kelvin(Kelvin(u, x, lam), x, lam)
        Y = x + rng.uniform(0.5, 3, (100, 1)) * rng.normal(size=(100, 3))
        assert np.allclose(twice.values(Y), u.values(Y), rtol=1e-11)


def test_w_substitution_examples(rng):
    y = rng.uniform(-2, 2, 3)
    assert w_substitution(Bubble(np.zeros(3))).value(y) == pytest.approx(1 + y @ y, rel=1e-13)
    c = 7.0
    assert w_substitution(Constant(c, 4)).value(np.ones(4)) == pytest.approx(c ** (-2 / 2))
    assert w_substitution(Constant(c, 3)).value(y) == pytest.approx(c**-2)
    assert w_substitution(FundamentalSolution(np.zeros(3))).value([2, 0, 0]) == pytest.approx(4.0)
    with pytest.raises(DimensionTooSmall):
        w_substitution(QuadraticField(1.0, np.zeros(2), 2 * np.eye(2)))


def test_bubble_in_other_dimensions():
    for n in (3, 4, 5):
        b = Bubble(np.zeros(n))
        y = np.linspace(-0.5, 0.7, n)
        assert b.value(y) == pytest.approx((1 + y @ y) ** (-(n - 2) / 2))
        v, g, H = fd_jet(b.value, y)
        j = b.jet(y)
        assert np.allclose(j.hessian, H, atol=1e-6)


def test_positivity_and_poles():
    with pytest.raises(NonPositiveValue):
        Constant(0.0, 3)
    with pytest.raises(NonPositiveValue):
        Constant(-1.0, 3)
    with pytest.raises(SingularPoint):
        FundamentalSolution(np.zeros(3)).jet(np.zeros(3))
    with pytest.raises(SingularPoint):
        Kelvin(Constant(1.0, 3), np.ones(3), 1.0).value(np.ones(3))
    p = HarmonicPolynomial.parse("1 + y1*y2", 3)
    with pytest.raises(NonPositiveValue):
        p.value([2, -2, 0])
    with pytest.raises(DimensionMismatch):
        Bubble(np.zeros(3)).value([1.0, 2.0])


def test_harmonic_polynomial_rejects_nonharmonic():
    with pytest.raises(ValueError):
        HarmonicPolynomial.parse("1 + y1^2", 3)
    with pytest.raises(ValueError):
        HarmonicPolynomial({(2, 0, 0): 1.0, (0, 2, 0): 1.0}, 3, offset=1.0)
    HarmonicPolynomial({(2, 0, 0): 1.0, (0, 0, 2): -1.0}, 3, offset=1.0)
    with pytest.raises(ValueError):
        HarmonicPolynomial.parse("1 + y4", 3)


@settings(max_examples=50, deadline=None)
@given(
    a=st.floats(-2, 2), b=st.floats(-2, 2), c=st.floats(-2, 2),
    y=st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)),
)
def test_harmonic_laplacian_is_zero(a, b, c, y):
    p = HarmonicPolynomial({(1, 1, 0): a, (2, 0, 0): b, (0, 2, 0): -b, (0, 1, 1): c}, 3, offset=50.0)
    j = p.jet(np.array(y))
    assert abs(j.laplacian()) <= 1e-12 * max(1.0, abs(a) + abs(b) + abs(c))


# grid fields -------------------------------------------------------------------


def test_grid_validation():
    with pytest.raises(ValueError):
        GridField(np.ones((4, 5, 5)), 0.1)
    with pytest.raises(ValueError):
        GridField(np.ones((5, 5, 5)), 0.0)
    bad = np.ones((5, 5, 5))
    bad[2, 2, 2] = -1.0
    with pytest.raises(NonPositiveValue):
        GridField(bad, 0.1)
    g = GridField(np.ones((5, 5, 5)), 0.1)
    with pytest.raises(ValueError):
        g.samples[0, 0, 0] = 2.0


def test_grid_lattice_queries():
    g = GridField.sample(Bubble(np.zeros(3)), [-1, -1, -1], 0.25, (9, 9, 9))
    assert g.value([0, 0, 0]) == 1.0
    assert g.value([0.25, -0.5, 1.0]) == pytest.approx(Bubble(np.zeros(3)).value([0.25, -0.5, 1.0]))
    with pytest.raises(OutOfDomain):
        g.value([0.1, 0, 0])
    with pytest.raises(OutOfDomain):
        g.value([1.25, 0, 0])
    with pytest.raises(OutOfDomain):
        g.jet([-0.75, 0, 0])
    assert g.points().shape == (729, 3)


def test_grid_jet_converges_at_order_h2():
    u = Bubble(np.array([0.1, -0.2, 0.05]))
    y = np.array([0.2, 0.1, -0.3])
    exact = u.jet(y).hessian
    errs = []
    for h in (0.1, 0.05, 0.025):
        origin = y - 4 * h
        g = GridField.sample(u, origin, h, (9, 9, 9))
        errs.append(np.abs(g.jet(y).hessian - exact).max())
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert 3.5 < r1 < 4.5
    assert 3.5 < r2 < 4.5
