import math

import numpy as np
import pytest

from finrank.kernels import free_propagator_kernel
from finrank.profiles import (
    ProfileFamily,
    make_band_limited_profile,
    make_gaussian_profile,
    make_zero_mean_profile,
    modulated_family,
    translate,
)
from finrank.propagator import (
    DifferenceKernelEngine,
    QuadratureConfig,
    convolved_profile,
    difference_kernel_grid,
    finite_rank_difference_kernel,
    full_propagator_kernel,
    rank_one_difference_kernel,
    trace_class_difference_kernel,
)

G1 = make_gaussian_profile(1, 1.0)

# grid-oracle values (L = 64, n = 1024) for the width-1 Gaussian, alpha = 1
FROZEN_ORACLE = [
    (1.0, -0.5, -0.5, -0.30221799250748643 - 0.136875030224205j),
    (2.0, 0.0, -0.5, -0.33348272894041708 + 0.18877380407518046j),
    (4.0, 0.5, 0.0, -0.040154123809534925 + 0.093143398097735974j),
]


@pytest.mark.parametrize("t, x, y, ref", FROZEN_ORACLE)
def test_frozen_oracle_values(t, x, y, ref):
    s = rank_one_difference_kernel(G1, 1.0, t, x, y)
    assert s.diff_value == pytest.approx(ref, abs=1e-8)
    assert s.err_est < 1e-6


def test_s_wave_reduction_d3_against_d1():
    # radial rank-one problems in d = 3 reduce to odd ones on the line:
    # D3(t, r e1, r' e1) = D1(t, r, r') / (2 pi r r') with the odd profile sqrt(2 pi) x phi3(|x|)
    g3 = make_gaussian_profile(3, 1.0)
    z1 = make_zero_mean_profile(1, 1.0)
    rs = np.array([0.5, 1.0, 2.0])
    pts3 = np.column_stack([rs, 0 * rs, 0 * rs])
    for t in (1.0, 3.0):
        d3 = difference_kernel_grid(ProfileFamily.single(g3), [t], pts3, pts3).values[0]
        d1 = difference_kernel_grid(ProfileFamily.single(z1), [t], rs, rs).values[0]
        ref = d1 / (2 * math.pi * rs[:, None] * rs[None, :])
        assert np.max(np.abs(d3 - ref)) < 1e-9


def test_empty_family_gives_zero_and_free_kernel():
    s = finite_rank_difference_kernel(ProfileFamily.empty(), 1.0, 0.3, -0.2)
    assert s.diff_value == 0
    assert full_propagator_kernel(ProfileFamily.empty(), 1.0, 0.3, -0.2) == pytest.approx(
        free_propagator_kernel(1, 1.0, 0.5))


def test_symmetry_and_time_reversal_real_profile():
    f = ProfileFamily((G1, translate(G1, [1.0])), (1.0, 0.5))
    pts = [-1.0, 0.2, 1.3]
    g = difference_kernel_grid(f, [2.0, -2.0], pts, pts)
    assert np.max(np.abs(g.values[0] - g.values[0].T)) < 1e-12
    assert np.max(np.abs(g.values[1] - np.conj(g.values[0]))) < 1e-12


def test_engine_grid_matches_pointwise_samples():
    f = ProfileFamily.single(G1, 0.7)
    xs, ys = [0.0, 1.5], [-0.5]
    grid = DifferenceKernelEngine(f, xs, ys, 3.0).evaluate([1.0, 3.0])
    for k, t in enumerate([1.0, 3.0]):
        for a, x in enumerate(xs):
            assert grid.values[k, a, 0] == pytest.approx(rank_one_difference_kernel(G1, 0.7, t, x, -0.5).diff_value,
                                                         abs=1e-12)


def test_quadrature_refinement_is_stable():
    base = QuadratureConfig()
    a = rank_one_difference_kernel(G1, 1.0, 2.0, 0.3, 0.1, base).diff_value
    b = rank_one_difference_kernel(G1, 1.0, 2.0, 0.3, 0.1, base.halved()).diff_value
    assert abs(a - b) < 1e-8


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(phase_budget=4.0)
    with pytest.raises(ValueError):
        QuadratureConfig(epsilon_schedule=(0.01,))


def test_small_alpha_is_linear():
    a = rank_one_difference_kernel(G1, 1e-3, 4.0, 0.0, 0.0).diff_value
    b = rank_one_difference_kernel(G1, 2e-3, 4.0, 0.0, 0.0).diff_value
    # the d = 1 low-energy pole keeps alpha F from being uniformly small, so linearity is approximate
    assert abs(b / a - 2.0) < 0.2


def test_trace_class_sum_and_tail():
    f = modulated_family(make_band_limited_profile(1, 1.0), 4, 4.0, "dyadic")
    s, tail = trace_class_difference_kernel(f, 1.0, 0.0, 0.0, 3)
    parts = sum(rank_one_difference_kernel(m, w, 1.0, 0.0, 0.0).diff_value for m, w in zip(f.members[:3], f.weights))
    assert s.diff_value == pytest.approx(parts, abs=1e-14)
    assert tail > 0
    with pytest.raises(ValueError):
        trace_class_difference_kernel(f, 1.0, 0.0, 0.0, 5)


def test_convolved_profile_branch_conjugation_for_real_profile():
    x = np.array([0.0, 0.8])
    plus = convolved_profile(G1, "plus", 1.1, x)
    minus = convolved_profile(G1, "minus", 1.1, x)
    assert np.allclose(minus, np.conj(plus), atol=1e-14)
