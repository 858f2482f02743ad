import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finrank.profiles import (
    ProfileFamily,
    gram_is_singular,
    gram_matrix,
    inner_product,
    make_band_limited_profile,
    make_gaussian_profile,
    make_zero_mean_profile,
    modulate,
    modulated_family,
    trace_class_tail,
    translate,
    translated_family,
    verify_decay,
)

MAKERS = [make_gaussian_profile, make_zero_mean_profile]


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("maker", MAKERS)
def test_profiles_are_normalised(maker, d):
    p = maker(d, 0.8)
    assert inner_product(p, p) == pytest.approx(1.0, abs=1e-9)


def test_d3_gaussian_normalised_radially():
    p = make_gaussian_profile(3, 0.8)
    r = np.linspace(0, 10, 20001)
    pts = np.column_stack([r, 0 * r, 0 * r])
    assert np.trapezoid(4 * math.pi * r**2 * np.abs(p.eval(pts)) ** 2, r) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_band_limited_is_normalised_with_compact_fourier_support(d):
    p = make_band_limited_profile(d, 1.5)
    assert inner_product(p, p, method="fourier") == pytest.approx(1.0, abs=1e-9)
    xi = np.zeros((3, d))
    xi[:, 0] = [1.49, 1.51, 3.0]
    ft = p.fourier_transform(xi)
    assert abs(ft[0]) > 0 and np.all(ft[1:] == 0)


def test_zero_mean_profile_has_zero_mean():
    for d in (1, 2, 3):
        assert abs(make_zero_mean_profile(d).mean) < 1e-15
    assert abs(make_gaussian_profile(1).mean) > 0.1


@given(st.floats(-3, 3), st.floats(-4, 4))
def test_fourier_transform_of_gaussian_d1(xi, x0):
    # unitary convention: int e^{-i x xi} phi(x) dx / sqrt(2 pi)
    p = translate(make_gaussian_profile(1, 1.0), [x0])
    xs = np.linspace(x0 - 12, x0 + 12, 4001)
    ref = np.trapezoid(np.exp(-1j * xs * xi) * p.eval(xs), xs) / math.sqrt(2 * math.pi)
    assert complex(p.fourier_transform(np.array([xi]))[0]) == pytest.approx(ref, abs=1e-10)


def test_spatial_and_fourier_inner_products_agree():
    p = translate(make_gaussian_profile(1, 1.0), [0.7])
    q = modulate(make_zero_mean_profile(1, 1.3), [0.9])
    a = inner_product(p, q, method="spatial")
    b = inner_product(p, q, method="fourier")
    assert a == pytest.approx(b, abs=1e-9)


def test_translation_and_modulation_commute_up_to_phase():
    p = make_gaussian_profile(2)
    a = modulate(translate(p, [1.0, 0.0]), [0.0, 2.0])
    b = translate(modulate(p, [0.0, 2.0]), [1.0, 0.0])
    x = np.random.default_rng(0).normal(size=(10, 2))
    assert np.allclose(a.eval(x), b.eval(x), atol=1e-15)


def test_gram_matrix_hermitian_and_singular_detection():
    g = make_gaussian_profile(1)
    f = ProfileFamily((g, translate(g, [1.0]), g), (1.0, 1.0, 1.0))
    G = gram_matrix(f)
    assert np.allclose(G, G.conj().T)
    assert gram_is_singular(G)
    assert not gram_is_singular(gram_matrix(ProfileFamily((g, translate(g, [1.0])), (1.0, 1.0))))


def test_decay_constant_is_verified():
    for maker in MAKERS:
        _, ok = verify_decay(maker(1))
        assert ok


def test_profile_validation():
    with pytest.raises(ValueError):
        make_gaussian_profile(1, width=-1.0)
    with pytest.raises(ValueError):
        make_gaussian_profile(3, delta=4.0)
    with pytest.raises(ValueError):
        ProfileFamily((make_gaussian_profile(1),), (-1.0,))
    with pytest.raises(ValueError):
        ProfileFamily((make_gaussian_profile(1), make_gaussian_profile(2)), (1.0, 1.0))


def test_family_constructors():
    g = make_gaussian_profile(3, 0.5)
    f = translated_family(g, 4, 3.0)
    assert f.N == 4 and f.tau0 == pytest.approx(3.0)
    m = modulated_family(make_band_limited_profile(1, 1.0), 5, 4.0)
    assert m.weights == tuple(2.0**-j for j in range(1, 6))
    assert m.is_fourier_disjoint and not m.is_real
    assert ProfileFamily.empty().N == 0


def test_trace_class_tail_decreases():
    tails = [trace_class_tail(1, 1.0, 4.0, J) for J in range(1, 8)]
    assert all(b < a for a, b in zip(tails, tails[1:]))
