import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from confspheres.cones import (
    ConeSpec,
    Verdict,
    classify,
    eigenvalues_sym,
    elementary_symmetric,
    parse_cone,
    sigma_k,
)
from confspheres.errors import IndexOutOfRange, NoConvergence

from conftest import brute_sigma

TOL = 1e-9


def test_sigma_examples():
    assert sigma_k([1, 2, 3], 1) == 6
    assert sigma_k([1, 2, 3], 2) == 11
    assert sigma_k([1, 2, 3], 3) == 6
    for k in (1, 2, 3):
        assert sigma_k([1, 2, 3], k) == brute_sigma([1, 2, 3], k)
    assert sigma_k([2, 2, 2, 2], 2) == 24 == math.comb(4, 2) * 2**2
    assert all(sigma_k(np.zeros(5), k) == 0 for k in range(1, 6))


def test_sigma_index_range():
    with pytest.raises(IndexOutOfRange):
        sigma_k([1, 2, 3], 0)
    with pytest.raises(IndexOutOfRange):
        sigma_k([1, 2, 3], 4)


def test_sigma_recurrence_matches_enumeration(rng):
    for n in range(1, 8):
        for _ in range(200):
            lam = rng.normal(size=n) * rng.uniform(0.1, 10)
            e = elementary_symmetric(lam)
            assert e[0] == 1.0
            for k in range(1, n + 1):
                ref = brute_sigma(lam, k)
                scale = math.comb(n, k) * max(1.0, np.abs(lam).max()) ** k
                assert abs(e[k] - ref) <= 1e-12 * scale


def test_eigenvalue_examples():
    assert np.array_equal(eigenvalues_sym(np.diag([3.0, 1.0, 2.0])), [1.0, 2.0, 3.0])
    assert np.allclose(eigenvalues_sym([[0.0, 1.0], [1.0, 0.0]]), [-1.0, 1.0], atol=1e-15)


def test_eigenvalues_trace_and_determinant(rng):
    for _ in range(50):
        A = rng.normal(size=(5, 5))
        M = A + A.T
        lam = eigenvalues_sym(M)
        assert np.all(np.diff(lam) >= 0)
        assert lam.sum() == pytest.approx(np.trace(M), rel=1e-10, abs=1e-12)
        assert np.prod(lam) == pytest.approx(np.linalg.det(M), rel=1e-10)
        assert np.allclose(lam, np.linalg.eigvalsh(M), atol=1e-12 * np.linalg.norm(M))


def test_eigenvalues_no_convergence(monkeypatch):
    import confspheres.cones as cones

    monkeypatch.setattr(cones, "JACOBI_MAX_SWEEPS", 0)
    with pytest.raises(NoConvergence) as info:
        eigenvalues_sym([[1.0, 1.0], [1.0, 2.0]])
    assert info.value.residual > 0


def test_classify_examples():
    g1 = ConeSpec.gamma(1, 3)
    assert classify([1, 1, 1], g1, TOL).verdict is Verdict.INTERIOR
    assert classify([1, -1, 0], g1, TOL).verdict is Verdict.BOUNDARY
    assert classify([2, 2, 2, 2], ConeSpec.gamma(2, 4), TOL).verdict is Verdict.INTERIOR
    assert classify([-1, -1, -1], g1, TOL).verdict is Verdict.EXTERIOR


def test_boundary_iff_margin_within_band(rng):
    cone = ConeSpec.gamma(2, 3)
    for _ in range(200):
        c = classify(rng.normal(size=3), cone, 0.05)
        assert (c.verdict is Verdict.BOUNDARY) == (abs(c.margin) <= 0.05)


def test_cone_specs():
    with pytest.raises(IndexOutOfRange):
        ConeSpec.gamma(4, 3)
    with pytest.raises(IndexOutOfRange):
        ConeSpec.gamma(0, 3)
    with pytest.raises(ValueError):
        ConeSpec.custom([2, 3], 3)
    c = ConeSpec.custom([1, 3], 3)
    assert c.indices == (1, 3)
    assert parse_cone("gammaK:2", 3) == ConeSpec.gamma(2, 3)
    assert parse_cone("gamma3", 3) == ConeSpec.gamma(3, 3)
    assert parse_cone("sigma:1,3", 3).indices == (1, 3)
    with pytest.raises(ValueError):
        parse_cone("cube", 3)


def test_cone_probe_invariants():
    for n in range(2, 7):
        for k in range(1, n + 1):
            cone = ConeSpec.gamma(k, n)
            assert classify(np.ones(n), cone, TOL).verdict is Verdict.INTERIOR
            tilted = np.ones(n)
            tilted[-1] = -n
            assert classify(tilted, cone, TOL).verdict is not Verdict.INTERIOR


vec3 = arrays(np.float64, 3, elements=st.floats(-10, 10, allow_nan=False))
vec4 = arrays(np.float64, 4, elements=st.floats(-10, 10, allow_nan=False))


@settings(max_examples=300, deadline=None)
@given(lam=vec4, k=st.integers(1, 4), perm=st.permutations(range(4)))
def test_classify_permutation_invariant(lam, k, perm):
    cone = ConeSpec.gamma(k, 4)
    a = classify(lam, cone, TOL)
    b = classify(lam[list(perm)], cone, TOL)
    assert a.verdict is b.verdict
    assert a.margin == pytest.approx(b.margin, rel=1e-12, abs=1e-14)


@settings(max_examples=300, deadline=None)
@given(lam=vec3, k=st.integers(1, 3), t=st.floats(1e-3, 1e3))
def test_classify_scaling(lam, k, t):
    cone = ConeSpec.gamma(k, 3)
    a = classify(lam, cone, TOL)
    b = classify(t * lam, cone, TOL)
    # the band is scale-normalized by max(1, |λ|∞): both margins outside the band agree in sign
    if abs(a.margin) > 10 * TOL and abs(b.margin) > 10 * TOL:
        assert a.verdict is b.verdict
    # and when both vectors have sup-norm >= 1 the margin itself is scale invariant
    big = np.abs(lam).max()
    if big >= 1 and t * big >= 1:
        assert b.margin == pytest.approx(a.margin, rel=1e-9, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(lam=vec4)
def test_cone_nesting(lam):
    cones = [ConeSpec.gamma(k, 4) for k in range(1, 5)]
    verdicts = [classify(lam, c, TOL).verdict for c in cones]
    if verdicts[-1] is Verdict.INTERIOR:
        assert all(v is Verdict.INTERIOR for v in verdicts)
    if verdicts[0] is Verdict.EXTERIOR:
        assert all(v is Verdict.EXTERIOR for v in verdicts)


@settings(max_examples=200, deadline=None)
@given(lam=arrays(np.float64, st.integers(1, 7), elements=st.floats(-5, 5, allow_nan=False)))
def test_sigma_recurrence_property(lam):
    e = elementary_symmetric(lam)
    n = len(lam)
    for k in range(1, n + 1):
        scale = math.comb(n, k) * max(1.0, np.abs(lam).max()) ** k
        assert abs(e[k] - brute_sigma(lam, k)) <= 1e-12 * scale


@settings(max_examples=200, deadline=None)
@given(m=arrays(np.float64, (4, 4), elements=st.floats(-100, 100, allow_nan=False)))
def test_jacobi_matches_lapack(m):
    M = m + m.T
    assume(np.isfinite(M).all())
    lam = eigenvalues_sym(M)
    ref = np.linalg.eigvalsh(M)
    assert np.allclose(lam, ref, rtol=0, atol=1e-12 * max(1.0, np.linalg.norm(M)))
