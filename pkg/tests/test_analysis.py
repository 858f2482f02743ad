import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finrank.analysis import (
    BoundaryMaxWarning,
    axis_points,
    fit_decay_exponent,
    fit_power_law,
    sup_kernel_norm,
    sup_norm_ladder,
)
from finrank.profiles import ProfileFamily, make_gaussian_profile


@given(st.floats(-3.0, 3.0), st.floats(0.1, 10.0))
def test_power_law_fit_is_exact(slope, c):
    t = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    s, stderr, intercept, resid = fit_power_law(t, c * t**slope)
    assert s == pytest.approx(slope, abs=1e-10)
    assert intercept == pytest.approx(math.log(c), abs=1e-10)
    assert resid < 1e-10


def test_decay_fit_validation():
    with pytest.raises(ValueError):
        fit_decay_exponent([1, 2, 4, 8], [1, 1, 1, 1], -0.5)
    with pytest.raises(ValueError):
        fit_decay_exponent([1, 2, 2, 8, 16], [1, 1, 1, 1, 1], -0.5)
    rep = fit_decay_exponent([1, 2, 4, 8, 16], [1, 0.5, 0.25, 0.125, 0.0625], -1.0, 0.01)
    assert rep.passed and rep.summary()["pass"]


def test_free_ladder_values():
    sups = sup_norm_ladder("free", [1.0, 4.0], axis_points([-1, 0, 1], 3), axis_points([0], 3), d=3)
    assert sups[1].value == pytest.approx((16 * math.pi) ** -1.5)


def test_empty_family_sup_is_zero():
    assert sup_kernel_norm(ProfileFamily.empty(), 1.0, [0.0], [0.0], d=1).value == 0


def test_boundary_max_warns():
    f = ProfileFamily.single(make_gaussian_profile(1))
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        s = sup_kernel_norm(f, 1.0, [0.0, 0.5, 1.0], [0.0])
    assert s.on_boundary == any(issubclass(x.category, BoundaryMaxWarning) for x in w)


def test_axis_points_shape():
    assert axis_points([1, 2], 1).shape == (2,)
    p = axis_points([1, 2], 3)
    assert p.shape == (2, 3) and np.all(p[:, 1:] == 0)
