import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special as sp

from finrank.special import (
    ASYMPTOTIC_CROSSOVER,
    SERIES_CROSSOVER,
    bessel_j,
    branch_sign,
    hankel_h0,
    j0_y0,
    spherical_jn,
    spherical_yn,
)


@given(st.floats(1e-6, 200.0))
def test_j0_y0_match_reference(z):
    j0, y0 = j0_y0(z)
    assert abs(j0 - sp.j0(z)) <= 1e-13 * max(1.0, abs(sp.j0(z))) + 1e-14
    assert abs(y0 - sp.y0(z)) <= 1e-13 * max(1.0, abs(sp.y0(z))) + 1e-14


@pytest.mark.parametrize("z", [SERIES_CROSSOVER, ASYMPTOTIC_CROSSOVER])
def test_crossovers_are_continuous(z):
    lo = np.array(j0_y0(np.nextafter(z, 0)))
    hi = np.array(j0_y0(z))
    assert np.max(np.abs(lo - hi)) < 1e-13


def test_j0_y0_against_mpmath_high_precision():
    for z in (0.3, 7.9, 12.5, 30.0, 95.0):
        j0, y0 = j0_y0(z)
        assert abs(j0 - float(mp.besselj(0, z))) < 5e-14
        assert abs(y0 - float(mp.bessely(0, z))) < 5e-14


def test_hankel_branches_are_conjugate():
    z = np.linspace(0.1, 40, 50)
    assert np.allclose(hankel_h0("minus", z), np.conj(hankel_h0("plus", z)), atol=0, rtol=0)


def test_j0_rejects_negative():
    with pytest.raises(ValueError):
        j0_y0(-1.0)


@pytest.mark.parametrize("branch, sign", [("plus", 1), ("minus", -1), (1, 1), (-1, -1), ("+", 1)])
def test_branch_sign(branch, sign):
    assert branch_sign(branch) == sign


def test_branch_sign_rejects_unknown():
    with pytest.raises(ValueError):
        branch_sign("up")


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_spherical_bessel(n):
    z = np.linspace(0.05, 30, 200)
    assert np.allclose(spherical_jn(n, z), sp.spherical_jn(n, z), rtol=1e-11, atol=1e-14)
    assert np.allclose(spherical_yn(n, z), sp.spherical_yn(n, z), rtol=1e-11, atol=1e-14)


@pytest.mark.parametrize("nu", [-0.5, 0.5, 1.5, 2.5])
def test_half_integer_bessel(nu):
    z = np.linspace(0.1, 25, 100)
    assert np.allclose(bessel_j(nu, z), sp.jv(nu, z), rtol=1e-11, atol=1e-14)


def test_half_integer_bessel_rejects_integer_order():
    with pytest.raises(ValueError):
        bessel_j(1.0, 1.0)
    assert math.isfinite(float(bessel_j(0.5, 0.0)))
