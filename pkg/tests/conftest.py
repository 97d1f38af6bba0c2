"""Shared fixtures and independent numerical oracles for the test suite."""

import numpy as np
import pytest

from dmstune import make_difference_operator, make_phantom


def bisect_root(g, lo, hi, iters=200):
    """Root of a nondecreasing scalar function by plain bisection."""
    glo, ghi = g(lo), g(hi)
    assert glo <= 0.0 <= ghi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if g(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scalar_prox_oracle(v, subgrad_fn, lo=None, hi=None):
    """1D prox of a convex penalty by bisection on the optimality condition.

    Minimizes F(t) = 0.5*(t - v)^2 + w(t); ``subgrad_fn(t)`` must return
    w's (sub)derivative at t != 0, so F' = (t - v) + subgrad_fn(t) is
    nondecreasing and its sign change locates the minimizer.  A sign
    change straddling 0 (the only possible kink) means the minimizer is
    exactly 0.
    """
    if lo is None:
        lo = -abs(v) - 10.0
    if hi is None:
        hi = abs(v) + 10.0

    def fprime(t):
        return (t - v) + subgrad_fn(t)

    # kink handling: if one-sided derivatives at 0 bracket zero, stop there
    eps = 1e-13
    if fprime(-eps) <= 0.0 <= fprime(eps):
        return 0.0
    if fprime(eps) < 0.0:
        return bisect_root(fprime, eps, hi)
    return bisect_root(fprime, lo, -eps)


@pytest.fixture(scope="session")
def op2():
    return make_difference_operator(2, 2)


@pytest.fixture(scope="session")
def op32():
    return make_difference_operator(32, 32)


@pytest.fixture(scope="session")
def op64():
    return make_difference_operator(64, 64)


@pytest.fixture(scope="session")
def diamond32():
    return make_phantom("diamond", 32, 32)


@pytest.fixture(scope="session")
def diamond64():
    return make_phantom("diamond", 64, 64)
