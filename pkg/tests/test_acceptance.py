"""Acceptance criteria 1-11; each test records a one-line verdict shown in the terminal summary."""

import math

import numpy as np
import pytest

from finrank.analysis import (
    alpha_scaling_experiment,
    fit_decay_exponent,
    n_scaling_experiment,
    sup_norm_ladder,
    tau_scaling_experiment,
)
from finrank.kernels import d2_kernel_split, resolvent_difference_kernel, resolvent_kernel
from finrank.oracle import GridSpec, discretize_hamiltonian, oracle_difference_grid
from finrank.oscillatory import (
    model_symbol,
    oscillatory_integral,
    sharp_symbol,
    stationary_phase_split,
    verify_bound_sweep,
)
from finrank.profiles import (
    ProfileFamily,
    make_band_limited_profile,
    make_gaussian_profile,
    modulate,
    modulated_family,
    translate,
    translated_family,
)
from finrank.propagator import difference_kernel_grid, finite_rank_difference_kernel, rank_one_difference_kernel
from finrank.scenario import load_config, preset_path, run_experiment
from finrank.spectral import (
    NeumannDivergenceError,
    ak_inverse_neumann,
    ak_system,
    borel_matrix,
    borel_tables,
    branch_matrices,
    member_margins,
    resolvent_apply,
    spreading_threshold,
)

TIME_LADDER = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]


def test_criterion_01_free_baseline(criterion):
    ts = np.array(TIME_LADDER)
    xs = np.linspace(-4, 4, 9)
    worst_slope, worst_sup = 0.0, 0.0
    for d in (1, 2, 3):
        pts = xs if d == 1 else np.column_stack([xs] + [np.zeros_like(xs)] * (d - 1))
        sups = np.array([s.value for s in sup_norm_ladder("free", ts, pts, pts, d=d)])
        rep = fit_decay_exponent(ts, sups, -d / 2, 1e-6)
        worst_slope = max(worst_slope, abs(rep.slope + d / 2))
        worst_sup = max(worst_sup, float(np.max(np.abs(sups / (4 * math.pi * ts) ** (-d / 2) - 1))))
    ok = worst_slope <= 1e-6 and worst_sup <= 1e-10
    assert criterion(1, ok, f"max |slope + d/2| = {worst_slope:.2e}, max sup rel err = {worst_sup:.2e}")


def test_criterion_02_oracle_equivalence(criterion):
    f = ProfileFamily.single(make_gaussian_profile(1, 1.0), 1.0)
    ts, pts = [1.0, 2.0, 4.0], [-0.5, 0.0, 0.5]
    grid = difference_kernel_grid(f, ts, pts, pts)
    op = discretize_hamiltonian(f, GridSpec(64.0, 1024))
    worst = 0.0
    for k, t in enumerate(ts):
        ref = oracle_difference_grid(op, t, pts, pts)
        worst = max(worst, float(np.max(np.abs(grid.values[k] - ref) / np.abs(ref))))
    assert criterion(2, worst <= 5e-3, f"max relative error {worst:.2e} over 27 reference points (limit 5e-3)")


@pytest.mark.parametrize("name, d", [("theorem1-d1", 1), ("theorem1-d3", 3)])
def test_criterion_03_dispersive_decay(criterion, name, d):
    cfg = load_config(preset_path(name))
    assert cfg.grids["t"] == tuple(TIME_LADDER)
    res = run_experiment(cfg)
    slope = res.summary["slope"]
    ok = abs(slope + d / 2) <= 0.15
    key = f"d{d}"
    test_criterion_03_dispersive_decay.seen[key] = (ok, slope)
    seen = test_criterion_03_dispersive_decay.seen
    criterion(3, all(v[0] for v in seen.values()),
              ", ".join(f"{k} slope {v[1]:.4f}" for k, v in sorted(seen.items())) + " (target -d/2 +- 0.15)")
    assert ok


test_criterion_03_dispersive_decay.seen = {}


def test_criterion_04_ak_algebra(criterion):
    lams = np.linspace(0.1, 5.0, 50)
    g1 = make_gaussian_profile(1, 1.0)
    fams = {
        1: ProfileFamily.single(g1, 1.0),
        3: ProfileFamily((g1, translate(g1, [1.5]), modulate(make_gaussian_profile(1, 0.7), [2.0])),
                         (1.0, 0.5, 0.25)),
    }
    worst = 0.0
    for N, f in fams.items():
        pv, g = borel_tables(f, lams)
        for s, b in ((1, "plus"), (-1, "minus")):
            F = branch_matrices(pv, g, lams, s)
            for k, lam in enumerate(lams):
                worst = max(worst, ak_system(F[k], f.weight_vector, lam, b).inverse_residual)
    g3 = make_gaussian_profile(3, 1.0)
    sys_ok = borel_matrix(translated_family(g3, 3, 8.0), 1.0)
    neu = ak_inverse_neumann(sys_ok)
    neumann_err = float(np.max(np.abs(neu.inverse - sys_ok.G)))
    with pytest.raises(NeumannDivergenceError) as info:
        ak_inverse_neumann(borel_matrix(translated_family(g3, 3, 1.0, 5.0), 0.5))
    ok = worst <= 1e-10 and neu.radius_bound <= 0.5 and neumann_err <= 1e-8
    assert criterion(4, ok, f"max ||GA - I|| = {worst:.1e}; Neumann (radius {neu.radius_bound:.3f}) err "
                            f"{neumann_err:.1e}; refused at radius {info.value.radius_bound:.3f}")


def test_criterion_05_resolvent_identity(criterion):
    g = make_gaussian_profile(1, 1.0)
    spec = GridSpec(40.0, 2048)
    x = spec.x
    rhs = np.exp(-((x - 1) ** 2)) * (1 + 0.3j * x)
    z = 1 + 1j
    worst = 0.0
    for f in (ProfileFamily.single(g, 1.0), ProfileFamily((g, translate(g, [2.0])), (1.0, 0.5))):
        op = discretize_hamiltonian(f, spec)
        u = resolvent_apply(f, z, x, rhs)
        worst = max(worst, float(np.linalg.norm(op.apply(u) - z * u - rhs) / np.linalg.norm(rhs)))
    assert criterion(5, worst <= 1e-3, f"max relative residual {worst:.2e} for N = 1, 2 (limit 1e-3)")


def test_criterion_06_diagonal_structure(criterion):
    f = modulated_family(make_band_limited_profile(1, 1.0), 3, 4.0, "dyadic")
    lams = np.linspace(0.1, 20.0, 50)
    pv, g = borel_tables(f, lams)
    off = 0.0
    for s in (1, -1):
        F = branch_matrices(pv, g, lams, s)
        F_off = F - np.einsum("kii->ki", F)[:, :, None] * np.eye(3)[None]
        off = max(off, float(np.max(np.abs(F_off))))
    worst = 0.0
    for t, x, y in [(1.0, 0.0, 0.0), (2.0, 0.5, -0.5), (4.0, 1.0, 2.0)]:
        total = finite_rank_difference_kernel(f, t, x, y).diff_value
        parts = sum(rank_one_difference_kernel(m, w, t, x, y).diff_value for m, w in zip(f.members, f.weights))
        worst = max(worst, abs(total - parts))
    ok = off <= 1e-8 and worst <= 1e-6
    assert criterion(6, ok, f"max off-diagonal |f_ij| = {off:.1e}; |finite rank - sum rank one| = {worst:.1e}")


def test_criterion_07_cross_term_decay(criterion):
    rep = tau_scaling_experiment(make_gaussian_profile(3, 1.0), [4.0, 8.0, 16.0, 32.0], 1.0)
    ok = rep.exponent <= -0.8
    assert criterion(7, ok, f"log-log slope of |f_12| = {rep.exponent:.4f} (limit -0.8, target -1)")


def test_criterion_08_scaling_exponents(criterion):
    band = make_band_limited_profile(1, 1.0)
    disjoint = n_scaling_experiment(lambda N: modulated_family(band, N, 4.0, "ones"), [1, 2, 4, 8], t_ref=1.0,
                                    grid_points=21, margin=10.0, x_margin=60.0, x_points=241, limit=1.2)
    g3 = make_gaussian_profile(3, 0.5)
    lams = np.linspace(0.05, g3.fourier_cutoff, 50)
    spread = n_scaling_experiment(lambda N: translated_family(g3, N, spreading_threshold(g3, N, lams)), [2, 4, 8],
                                  t_ref=4.0, grid_points=41, margin=4.0, limit=2.3)
    small = alpha_scaling_experiment(make_gaussian_profile(1, 1.0), [1e-3, 2e-3, 4e-3], 4.0, tolerance=0.2)
    ok = disjoint.passed and spread.passed and small.passed
    assert criterion(8, ok, f"Fourier-disjoint exponent {disjoint.exponent:.3f} (<= 1.2); translated d=3 "
                            f"exponent {spread.exponent:.3f} (<= 2.3); sup/alpha spread {small.extra['spread']:.3f} "
                            f"(<= 0.2)")


def test_criterion_09_oscillatory_lab(criterion):
    t = 400.0
    value = oscillatory_integral(t, 0.0, sharp_symbol(0.0, "low", 10.0)).value
    ref = 0.5 * math.sqrt(math.pi / t)
    fresnel = abs(abs(value) - ref) / ref
    psi_low, psi_high = model_symbol(0.0, 1, "low"), model_symbol(-0.5, 1, "high")
    recomb = 0.0
    count = 0
    for psi in (psi_low, psi_high):
        for tt in (1.0, 4.0, 16.0, 64.0, 256.0):
            for x in (-40.0, -8.0, -2.0, -0.5, 0.0, 0.5, 2.0, 8.0, 40.0, -100.0):
                i1, i2 = stationary_phase_split(tt, x, psi)
                recomb = max(recomb, abs(i1 + i2 - oscillatory_integral(tt, x, psi).value))
                count += 1
    sweeps = load_config(preset_path("oscillatory-appendixA")).section["oscillatory"]["sweeps"]
    growth = []
    for s in sweeps:
        assert s["t"] == {"powers": [2, 0, 10]}
        sym = s["symbol"]
        psi = model_symbol(sym["b"], sym["K"], sym["omega"])
        growth.append(verify_bound_sweep(s["bound"], psi, [2.0**k for k in range(11)], s["x"], s["d"]).growth)
    ok = fresnel <= 0.01 and recomb <= 1e-8 and count >= 100 and max(growth) <= 0.1
    assert criterion(9, ok, f"Fresnel rel err {fresnel:.2e}; recombination {recomb:.1e} on {count} points; "
                            f"max ratio growth under doubling {max(growth):.4f} over {len(growth)} sweeps")


def test_criterion_10_trace_class(criterion):
    J = 6
    f = modulated_family(make_band_limited_profile(1, 1.0), J, 4.0, "dyadic")
    margins = member_margins(f, np.linspace(0.05, 20.0, 80))
    decreasing = True
    details = []
    for t, x, y in [(1.0, 0.0, 0.0), (2.0, 0.5, -0.5), (4.0, 1.0, 0.0)]:
        steps = [abs(rank_one_difference_kernel(m, w, t, x, y).diff_value) for m, w in zip(f.members, f.weights)]
        decreasing &= all(b < a for a, b in zip(steps, steps[1:]))
        details.append(f"{steps[0]:.1e}->{steps[-1]:.1e}")
    ok = decreasing and bool(np.all(margins > 0.5))
    assert criterion(10, ok, f"partial-sum steps decrease ({', '.join(details)}); min member margin "
                             f"{margins.min():.3f} (> 0.5)")


def test_criterion_11_structural_invariants(criterion):
    g = make_gaussian_profile(1, 1.0)
    f = ProfileFamily((g, translate(g, [1.0])), (1.0, 0.5))
    pts = [-1.0, 0.0, 0.7]
    grid = difference_kernel_grid(f, [1.5, -1.5], pts, pts)
    sym = float(np.max(np.abs(grid.values[0] - grid.values[0].T)))
    rev = float(np.max(np.abs(grid.values[1] - np.conj(grid.values[0]))))
    cf = ProfileFamily((modulate(g, [1.0]), translate(make_gaussian_profile(1, 0.6), [0.8])), (1.0, 1.0))
    lams = np.linspace(0.1, 4.0, 20)
    pv, gg = borel_tables(cf, lams)
    Fp, Fm = branch_matrices(pv, gg, lams, 1), branch_matrices(pv, gg, lams, -1)
    herm = float(np.max(np.abs(Fm - np.conj(np.transpose(Fp, (0, 2, 1))))))
    im_diag = float(np.min(np.einsum("kii->ki", Fp).imag))
    split = 0.0
    for lam in (0.3, 1.0, 2.5):
        for r in (0.2, 0.6, 1.5, 4.0):
            w = d2_kernel_split(lam, r)
            split = max(split, abs(w.kernel() - complex(resolvent_kernel(2, lam, r, 1))),
                        abs(w.difference() - resolvent_difference_kernel(2, lam, r)))
    op = discretize_hamiltonian(f, GridSpec(32.0, 512))
    herm_grid = op.hermiticity_defect()
    lowest = float(op.eigenvalues.min())
    ok = sym <= 1e-10 and rev <= 1e-10 and herm <= 1e-12 and im_diag >= 0 and split <= 1e-12 \
        and herm_grid <= 1e-12 and lowest >= -1e-9
    assert criterion(11, ok, f"symmetry {sym:.0e}, time reversal {rev:.0e}, F- vs (F+)^H {herm:.0e}, "
                             f"min Im f_ii+ {im_diag:.2e}, d=2 split {split:.0e}, grid hermiticity "
                             f"{herm_grid:.0e}, min eigenvalue {lowest:.1e}")
