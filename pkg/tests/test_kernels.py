import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finrank.kernels import (
    DomainError,
    SpectralPoint,
    d2_kernel_split,
    free_propagator_kernel,
    free_resolvent_kernel,
    low_energy_expansion,
    plateau,
    resolvent_difference_kernel,
    resolvent_kernel,
    smooth_step,
)

lams = st.floats(0.05, 20.0)
radii = st.floats(0.01, 20.0)


def test_d1_kernel_at_origin():
    assert free_resolvent_kernel(SpectralPoint(1, "plus", 2.0, 0.0)) == pytest.approx(0.25j, abs=1e-16)


@given(lams, radii)
def test_d3_kernel_closed_form(lam, r):
    v = complex(resolvent_kernel(3, lam, r, 1))
    assert v == pytest.approx(np.exp(1j * lam * r) / (4 * math.pi * r), rel=1e-13)


@given(st.sampled_from([1, 2, 3, 5]), lams, radii)
def test_minus_branch_is_conjugate(d, lam, r):
    plus = complex(resolvent_kernel(d, lam, r, 1))
    minus = complex(resolvent_kernel(d, lam, r, -1))
    assert minus == pytest.approx(plus.conjugate(), rel=1e-13, abs=1e-15)


@given(st.sampled_from([1, 2, 3, 5]), lams, radii)
def test_difference_kernel_matches_branches(d, lam, r):
    plus = complex(resolvent_kernel(d, lam, r, 1))
    minus = complex(resolvent_kernel(d, lam, r, -1))
    assert resolvent_difference_kernel(d, lam, r) == pytest.approx(plus - minus, rel=1e-11, abs=1e-13)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_helmholtz_equation_by_finite_differences(d):
    # radial Laplacian of the kernel plus lam^2 times it vanishes away from r = 0
    lam, r, h = 1.3, 2.0, 1e-3

    def k(s):
        return complex(resolvent_kernel(d, lam, s, 1))

    second = (k(r + h) - 2 * k(r) + k(r - h)) / h**2
    first = (k(r + h) - k(r - h)) / (2 * h)
    assert abs(second + (d - 1) / r * first + lam**2 * k(r)) < 1e-5


def test_difference_kernel_is_finite_at_origin():
    for d in (1, 2, 3, 5):
        v = resolvent_difference_kernel(d, 0.7, 0.0)
        assert math.isfinite(abs(v))
        assert v == pytest.approx(resolvent_difference_kernel(d, 0.7, 1e-7), rel=1e-8)


@given(st.sampled_from([1, 2, 3]), st.floats(1e-3, 0.9), st.floats(1e-3, 50.0), st.sampled_from(["plus", "minus"]))
def test_low_energy_remainder_bound(d, lam, r, branch):
    p = SpectralPoint(d, branch, lam, r)
    e = low_energy_expansion(p)
    assert abs(free_resolvent_kernel(p) - e.value) <= e.remainder_bound * (1 + 1e-9) + 1e-14


def test_domain_errors():
    with pytest.raises(DomainError):
        SpectralPoint(4, "plus", 1.0, 1.0)
    with pytest.raises(DomainError):
        SpectralPoint(3, "plus", 0.0, 1.0)
    with pytest.raises(DomainError):
        free_resolvent_kernel(SpectralPoint(3, "plus", 1.0, 0.0))
    with pytest.raises(DomainError):
        low_energy_expansion(SpectralPoint(1, "plus", 2.0, 1.0))
    with pytest.raises(DomainError):
        free_propagator_kernel(1, 0.0, 1.0)


@given(st.sampled_from([1, 2, 3]), st.floats(0.01, 100.0), st.floats(0.0, 50.0))
def test_free_propagator_modulus(d, t, r):
    assert abs(free_propagator_kernel(d, t, r)) == pytest.approx((4 * math.pi * t) ** (-d / 2), rel=1e-13)


def test_free_propagator_solves_schroedinger_d1():
    # i u_t + u_xx = 0
    t, x, h = 0.7, 0.4, 1e-4
    u = lambda tt, xx: free_propagator_kernel(1, tt, abs(xx))  # noqa: E731
    ut = (u(t + h, x) - u(t - h, x)) / (2 * h)
    uxx = (u(t, x + h) - 2 * u(t, x) + u(t, x - h)) / h**2
    assert abs(1j * ut + uxx) < 1e-5


@given(lams, st.floats(0.01, 30.0))
def test_d2_split_recomposes(lam, r):
    w = d2_kernel_split(lam, r)
    assert w.kernel() == pytest.approx(complex(resolvent_kernel(2, lam, r, 1)), rel=1e-12, abs=1e-14)
    assert w.difference() == pytest.approx(resolvent_difference_kernel(2, lam, r), rel=1e-12, abs=1e-14)


def test_cutoffs():
    s = np.linspace(-1, 2, 301)
    v = smooth_step(s)
    assert np.all(np.diff(v) >= 0)
    assert np.all(v[s <= 0] == 0) and np.all(v[s >= 1] == 1)
    z = np.linspace(-2, 2, 401)
    p = plateau(z)
    assert np.all(p[np.abs(z) <= 0.5] == 1) and np.all(p[np.abs(z) >= 1] == 0)
    assert np.allclose(p, p[::-1])
