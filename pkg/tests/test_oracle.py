import numpy as np
import pytest

from finrank.oracle import (
    BoxTooSmallError,
    BudgetExceededError,
    GridSpec,
    discretize_hamiltonian,
    free_grid_propagator,
    grid_propagator,
    oracle_difference_grid,
    oracle_difference_kernel,
)
from finrank.profiles import ProfileFamily, make_gaussian_profile, translate

G1 = make_gaussian_profile(1, 1.0)


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(10.0, 100)
    with pytest.raises(ValueError):
        GridSpec(10.0, 32)
    with pytest.raises(ValueError):
        GridSpec(0.0, 64)
    g = GridSpec(8.0, 64)
    assert g.index(g.x[5]) == 5
    with pytest.raises(ValueError):
        g.index(0.1)


def test_free_grid_propagator_evolves_gaussian_packet():
    # exp(it d^2) exp(-x^2/2) = (1 + 2it)^{-1/2} exp(-x^2 / (2 (1 + 2it)))
    spec = GridSpec(40.0, 512)
    t = 1.0
    u0 = np.exp(-0.5 * spec.x**2)
    u = sum(spec.h * u0[j] * free_grid_propagator(spec, t, j) for j in range(spec.n))
    ref = (1 + 2j * t) ** -0.5 * np.exp(-(spec.x**2) / (2 * (1 + 2j * t)))
    assert np.max(np.abs(u - ref)) < 1e-12


def test_operator_is_hermitian_and_nonnegative():
    f = ProfileFamily((G1, translate(G1, [1.0])), (1.0, 0.5))
    op = discretize_hamiltonian(f, GridSpec(32.0, 512))
    assert op.hermiticity_defect() == 0.0
    assert op.eigenvalues.min() > -1e-10


def test_apply_matches_dense_matrix():
    f = ProfileFamily.single(G1, 0.8)
    op = discretize_hamiltonian(f, GridSpec(16.0, 128))
    u = np.random.default_rng(1).normal(size=128) + 0j
    assert np.allclose(op.apply(u), op.H_mat @ u, atol=1e-10)


def test_grid_propagator_is_unitary():
    f = ProfileFamily.single(G1, 1.0)
    spec = GridSpec(32.0, 256)
    op = discretize_hamiltonian(f, spec)
    col = grid_propagator(op, 0.5, spec.index(0.0))
    assert np.sum(np.abs(col) ** 2) * spec.h**2 == pytest.approx(1.0, rel=1e-12)


def test_box_too_small_and_budget():
    with pytest.raises(BoxTooSmallError):
        discretize_hamiltonian(ProfileFamily.single(G1), GridSpec(4.0, 64))
    op = discretize_hamiltonian(ProfileFamily.single(G1), GridSpec(16.0, 256))
    with pytest.raises(BudgetExceededError):
        oracle_difference_grid(op, 10.0, [0.0], [0.0])


def test_empty_family_difference_vanishes():
    op = discretize_hamiltonian(ProfileFamily.empty(), GridSpec(16.0, 128))
    assert np.all(oracle_difference_grid(op, 1.0, [0.0, 1.0], [0.5]) == 0)


def test_off_node_points_interpolate():
    f = ProfileFamily.single(G1)
    spec = GridSpec(64.0, 1024)
    a = oracle_difference_kernel(f, spec, 1.0, 0.0, 0.0)
    b = oracle_difference_kernel(f, spec, 1.0, 0.01, 0.0)
    assert abs(a - b) < 1e-2
