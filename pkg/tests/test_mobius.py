import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confspheres.errors import DimensionMismatch, SingularPoint
from confspheres.mobius import (
    Inversion,
    MobiusMap,
    Scaling,
    Translation,
    apply,
    compose,
    identity,
    inverse,
    inversion,
    jacobian_det_abs,
    kelvin_map,
    kelvin_point,
    log_jacobian_det_abs,
    propagate,
    scaling,
    translation,
)


def fd_jacobian(psi, x, h=1e-6):
    n = len(x)
    J = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        J[:, k] = (apply(psi, x + e) - apply(psi, x - e)) / (2 * h)
    return J


def random_word(rng, n, length):
    gens = []
    for _ in range(length):
        kind = rng.integers(3)
        if kind == 0:
            gens.append(Translation(rng.uniform(-1, 1, n)))
        elif kind == 1:
            gens.append(Scaling(rng.uniform(0.5, 2.0) * rng.choice([-1, 1])))
        else:
            gens.append(Inversion())
    return MobiusMap(gens, n)


def safe_point(psi, rng, n, margin=0.1):
    """A point at which every intermediate image stays away from the origin."""
    while True:
        y = rng.uniform(-2, 2, n)
        z = y.copy()
        ok = True
        for g in reversed(psi.word):
            if isinstance(g, Inversion):
                if np.linalg.norm(z) < margin:
                    ok = False
                    break
                z = z / (z @ z)
            elif isinstance(g, Scaling):
                z = g.a * z
            else:
                z = z + np.asarray(g.b)
        if ok:
            return y


def test_apply_examples():
    assert np.allclose(apply(inversion(3), [2, 0, 0]), [0.5, 0, 0])
    f = compose(translation([1, 1, 0]), inversion(3))
    assert np.allclose(apply(f, [1, 0, 0]), [2, 1, 0])
    assert np.allclose(apply(scaling(3, 3), [1, 2, 0]), [3, 6, 0])


def test_jacobian_examples():
    assert jacobian_det_abs(inversion(3), [2, 0, 0]) == pytest.approx(1 / 64, rel=1e-14)
    J = fd_jacobian(inversion(3), np.array([2.0, 0, 0]))
    assert abs(np.linalg.det(J)) == pytest.approx(1 / 64, rel=1e-8)
    assert jacobian_det_abs(scaling(2, 3), [0.3, -1, 4]) == pytest.approx(8)
    assert jacobian_det_abs(translation([1, 2, 3]), [5, 5, 5]) == 1.0


def test_inverse_and_involution_examples():
    assert np.allclose(apply(inverse(scaling(2, 3)), [2, 0, 0]), [1, 0, 0])
    ii = compose(inversion(3), inversion(3))
    assert np.allclose(apply(ii, [0.3, 0.4, 0]), [0.3, 0.4, 0], rtol=0, atol=1e-15)


def test_kelvin_point_examples():
    assert np.allclose(kelvin_point([0, 0, 0], 1, [2, 0, 0]), [0.5, 0, 0])
    assert np.allclose(kelvin_point([0, 0, 0], 2, [2, 0, 0]), [2, 0, 0])
    assert np.allclose(kelvin_point([1, 0, 0], 1, [3, 0, 0]), [1.5, 0, 0])


def test_kelvin_point_matches_kelvin_map(rng):
    for _ in range(20):
        x = rng.uniform(-1, 1, 3)
        lam = rng.uniform(0.5, 2)
        y = x + rng.uniform(0.3, 2) * rng.normal(size=3)
        assert np.allclose(kelvin_point(x, lam, y), apply(kelvin_map(x, lam), y), rtol=1e-13)


def test_batched_apply(rng):
    psi = random_word(rng, 3, 3)
    Y = np.array([safe_point(psi, rng, 3) for _ in range(5)])
    batch = apply(psi, Y)
    assert batch.shape == (5, 3)
    for y, b in zip(Y, batch):
        assert np.allclose(apply(psi, y), b, rtol=1e-14)


def test_singular_point_raises():
    with pytest.raises(SingularPoint):
        apply(inversion(3), [0, 0, 0])
    with pytest.raises(SingularPoint):
        kelvin_point([1, 1, 1], 1.0, [1, 1, 1])
    with pytest.raises(SingularPoint):
        jacobian_det_abs(compose(inversion(3), translation([1, 0, 0])), [-1, 0, 0])


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        compose(inversion(3), inversion(2))
    with pytest.raises(DimensionMismatch):
        apply(inversion(3), [1.0, 2.0])


def test_zero_scaling_rejected():
    with pytest.raises(ValueError):
        scaling(0.0, 3)


def test_identity_and_equality():
    f = compose(translation([1, 0, 0]), inversion(3))
    assert compose(identity(3), f) == f
    assert hash(compose(identity(3), f)) == hash(f)
    assert f != inversion(3)


def test_group_law_and_inverse(rng):
    for _ in range(100):
        f = random_word(rng, 3, int(rng.integers(1, 4)))
        g = random_word(rng, 3, int(rng.integers(1, 4)))
        fg = compose(f, g)
        x = safe_point(fg, rng, 3)
        assert np.allclose(apply(fg, x), apply(f, apply(g, x)), rtol=1e-12, atol=1e-12)
        back = apply(compose(inverse(fg), fg), x)
        assert np.linalg.norm(back - x) <= 1e-12 * max(1.0, np.linalg.norm(x)) * 10


def test_jacobian_chain_rule(rng):
    for _ in range(100):
        f = random_word(rng, 3, 2)
        g = random_word(rng, 3, 2)
        fg = compose(f, g)
        x = safe_point(fg, rng, 3)
        lhs = jacobian_det_abs(fg, x)
        rhs = jacobian_det_abs(g, x) * jacobian_det_abs(f, apply(g, x))
        assert lhs == pytest.approx(rhs, rel=1e-12)
        assert lhs > 0
        assert log_jacobian_det_abs(fg, x) == pytest.approx(np.log(lhs), abs=1e-12)


def test_jacobian_matches_finite_differences(rng):
    for _ in range(30):
        psi = random_word(rng, 3, 3)
        x = safe_point(psi, rng, 3, margin=0.3)
        J = fd_jacobian(psi, x)
        assert jacobian_det_abs(psi, x) == pytest.approx(abs(np.linalg.det(J)), rel=1e-6)


def test_propagate_first_and_second_order(rng):
    h = 1e-5
    for _ in range(20):
        psi = random_word(rng, 3, 3)
        x = safe_point(psi, rng, 3, margin=0.3)
        jet = propagate(psi, x)
        assert np.allclose(jet.value, apply(psi, x), rtol=1e-13)
        assert np.allclose(jet.jacobian, fd_jacobian(psi, x), rtol=1e-6, atol=1e-6)
        for k in range(3):
            e = np.eye(3)
            H = np.empty((3, 3))
            for a in range(3):
                for b in range(3):
                    H[a, b] = (
                        apply(psi, x + h * e[a] + h * e[b])[k] - apply(psi, x + h * e[a] - h * e[b])[k]
                        - apply(psi, x - h * e[a] + h * e[b])[k] + apply(psi, x - h * e[a] - h * e[b])[k]
                    ) / (4 * h * h)
            scale = max(1.0, np.abs(jet.second[k]).max())
            assert np.allclose(jet.second[k], H, atol=1e-4 * scale)
        assert jet.log_det == pytest.approx(log_jacobian_det_abs(psi, x), abs=1e-12)


coords = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(
    x=st.tuples(coords, coords, coords),
    d=st.tuples(coords, coords, coords),
    lam=st.floats(0.1, 10),
)
def test_kelvin_point_involution_and_sphere_fixing(x, d, lam):
    x = np.array(x)
    d = np.array(d)
    r = np.linalg.norm(d)
    if r < 1e-3:
        return
    y = x + d
    z = kelvin_point(x, lam, y)
    back = kelvin_point(x, lam, z)
    assert np.linalg.norm(back - y) <= 1e-12 * max(np.linalg.norm(y), np.linalg.norm(x), 1.0) * 10
    assert np.linalg.norm(z - x) * r == pytest.approx(lam * lam, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 6), a=st.floats(0.1, 10), sign=st.sampled_from([-1, 1]))
def test_scaling_jacobian_is_power(n, a, sign):
    x = np.linspace(-1, 1, n) + 0.1
    assert jacobian_det_abs(scaling(sign * a, n), x) == pytest.approx(a**n, rel=1e-13)
