import itertools
import math

import numpy as np
import pytest


def fd_jet(f, y, h=1e-5):
    """Central-difference value, gradient and Hessian of a scalar callable."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    e = np.eye(n) * h
    g = np.array([(f(y + e[i]) - f(y - e[i])) / (2 * h) for i in range(n)])
    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            H[i, j] = (
                f(y + e[i] + e[j]) - f(y + e[i] - e[j]) - f(y - e[i] + e[j]) + f(y - e[i] - e[j])
            ) / (4 * h * h)
    return f(y), g, H


def fd_hessian_from_gradient(grad, y, h=1e-5):
    """Central differences of a gradient callable; roundoff ~ eps/h instead of eps/h²."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    e = np.eye(n) * h
    H = np.array([(grad(y + e[i]) - grad(y - e[i])) / (2 * h) for i in range(n)])
    return 0.5 * (H + H.T)


def brute_sigma(lam, k):
    """σ_k by subset enumeration."""
    if k == 0:
        return 1.0
    return math.fsum(math.prod(c) for c in itertools.combinations(lam, k))


def a_u_reference(value, grad, hess, n):
    """A^u written out term by term, independent of the package."""
    p = -(n + 2) / (n - 2)
    q = -2 * n / (n - 2)
    return (
        -2 / (n - 2) * value**p * hess
        + 2 * n / (n - 2) ** 2 * value**q * np.outer(grad, grad)
        - 2 / (n - 2) ** 2 * value**q * grad @ grad * np.eye(n)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE = []


def record(name, ok, measured, tol, detail=""):
    """Log one acceptance line (shown in the terminal summary), then assert."""
    line = f"{'PASS' if ok else 'FAIL'}  {name:<28} measured={measured:.6g}  tol={tol:.3g}  {detail}".rstrip()
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
