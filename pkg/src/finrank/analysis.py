"""Experiment harnesses: sup-norms of kernels, decay fits and scaling studies."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .convolution import points_array
from .kernels import free_propagator_kernel
from .profiles import Profile, ProfileFamily, translated_family
from .propagator import DifferenceKernelEngine, QuadratureConfig
from .spectral import cross_term_decay_probe

__all__ = [
    "BoundaryMaxWarning",
    "SupNorm",
    "DecayFitReport",
    "ScalingReport",
    "sup_kernel_norm",
    "sup_norm_ladder",
    "fit_decay_exponent",
    "fit_power_law",
    "n_scaling_experiment",
    "tau_scaling_experiment",
    "alpha_scaling_experiment",
    "axis_points",
    "translated_generator",
]


class BoundaryMaxWarning(UserWarning):
    """The sup over the grid sits on its boundary, so a larger grid may raise it."""


def axis_points(values, d: int) -> np.ndarray:
    """Points ``v e1`` in R^d (the line through the profile centres)."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if d == 1:
        return v
    out = np.zeros((len(v), d))
    out[:, 0] = v
    return out


@dataclass(frozen=True)
class SupNorm:
    t: float
    value: float
    argmax: tuple
    on_boundary: bool


def _first_coordinate(pts: np.ndarray) -> np.ndarray:
    return pts if pts.ndim == 1 else pts[:, 0]


def _sup_from_values(t, values, xs, ys, warn=True) -> SupNorm:
    a = np.abs(values)
    i, j = np.unravel_index(int(np.argmax(a)), a.shape)
    fx, fy = _first_coordinate(xs), _first_coordinate(ys)
    boundary = bool(
        (len(fx) > 1 and fx[i] in (fx.min(), fx.max())) or (len(fy) > 1 and fy[j] in (fy.min(), fy.max()))
    )
    if boundary and warn and a[i, j] > 0:
        warnings.warn(f"sup at t={t:g} lies on the grid boundary", BoundaryMaxWarning, stacklevel=3)
    return SupNorm(float(t), float(a[i, j]), (float(fx[i]), float(fy[j])), boundary)


def _free_values(d: int, t: float, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    diff = xs[:, None] - ys[None, :] if d == 1 else xs[:, None, :] - ys[None, :, :]
    r = np.abs(diff) if d == 1 else np.linalg.norm(diff, axis=-1)
    return free_propagator_kernel(d, t, r)


def sup_norm_ladder(source, ts, xs, ys, cfg: QuadratureConfig | None = None, d: int | None = None,
                    warn: bool = True) -> list[SupNorm]:
    """Sup-norms of a kernel over the ``xs x ys`` grid for every time.

    ``source`` is a :class:`ProfileFamily` (difference kernel), the string
    ``"free"`` (free propagator, needs ``d``) or a callable
    ``(t, xs, ys) -> array``.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if isinstance(source, ProfileFamily):
        dim = source.d if source.N else (d or 1)
        xa, ya = points_array(xs, dim), points_array(ys, dim)
        if source.N == 0:
            return [SupNorm(float(t), 0.0, (0.0, 0.0), False) for t in ts]
        grid = DifferenceKernelEngine(source, xa, ya, float(np.max(np.abs(ts))), cfg).evaluate(ts)
        return [_sup_from_values(t, grid.values[k], xa, ya, warn) for k, t in enumerate(ts)]
    if isinstance(source, str):
        if source != "free" or d is None:
            raise ValueError("string sources must be 'free' with a dimension")
        xa, ya = points_array(xs, d), points_array(ys, d)
        return [_sup_from_values(t, _free_values(d, t, xa, ya), xa, ya, warn=False) for t in ts]
    xa, ya = np.asarray(xs), np.asarray(ys)
    return [_sup_from_values(t, np.asarray(source(t, xa, ya)), xa, ya, warn) for t in ts]


def sup_kernel_norm(source, t: float, xs, ys, cfg: QuadratureConfig | None = None, d: int | None = None) -> SupNorm:
    return sup_norm_ladder(source, [t], xs, ys, cfg, d)[0]


@dataclass(frozen=True)
class DecayFitReport:
    times: np.ndarray
    sup_norms: np.ndarray
    slope: float
    stderr: float
    intercept: float
    max_residual: float
    target: float
    tolerance: float
    passed: bool

    def summary(self) -> dict:
        return {
            "slope": self.slope,
            "stderr": self.stderr,
            "intercept": self.intercept,
            "max_residual": self.max_residual,
            "target": self.target,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }

    def rows(self):
        return [[float(t), float(n)] for t, n in zip(self.times, self.sup_norms)]


def fit_power_law(xs, ys) -> tuple[float, float, float, float]:
    """Least squares of ``log y`` on ``log x``: (slope, stderr, intercept, max |residual|)."""
    lx, ly = np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float))
    if len(lx) == 2:
        slope = (ly[1] - ly[0]) / (lx[1] - lx[0])
        return float(slope), 0.0, float(ly[0] - slope * lx[0]), 0.0
    fit = stats.linregress(lx, ly)
    resid = ly - (fit.intercept + fit.slope * lx)
    return float(fit.slope), float(fit.stderr), float(fit.intercept), float(np.max(np.abs(resid)))


def fit_decay_exponent(times, norms, target: float = math.nan, tolerance: float = 0.15) -> DecayFitReport:
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if len(times) < 5:
        raise ValueError("a decay fit needs at least 5 ladder points")
    if np.any(np.diff(times) <= 0) or np.any(times <= 0):
        raise ValueError("times must be positive and strictly increasing")
    if np.any(norms <= 0):
        raise ValueError("sup-norms must be positive")
    slope, stderr, intercept, resid = fit_power_law(times, norms)
    passed = bool(math.isfinite(target) and abs(slope - target) <= tolerance)
    return DecayFitReport(times, norms, slope, stderr, intercept, resid, target, tolerance, passed)


@dataclass(frozen=True)
class ScalingReport:
    parameter: str
    values: np.ndarray
    constants: np.ndarray
    exponent: float
    stderr: float
    limit: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "parameter": self.parameter,
            "exponent": self.exponent,
            "stderr": self.stderr,
            "limit": self.limit,
            "pass": self.passed,
            **self.extra,
        }

    def rows(self):
        return [[float(v), float(c)] for v, c in zip(self.values, self.constants)]


def _increasing(values, name: str) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if np.any(np.diff(v) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return v


def _family_extent(f: ProfileFamily, margin: float) -> tuple[float, float]:
    c = [float(m.tau_vec[0]) for m in f.members]
    return min(c) - margin, max(c) + margin


def n_scaling_experiment(generator, N_list, t_ref: float = 4.0, grid_points: int = 41, margin: float = 4.0,
                         cfg: QuadratureConfig | None = None, limit: float = 1.2,
                         x_margin: float | None = None, x_points: int | None = None) -> ScalingReport:
    """``C_est(N) = sup |diff kernel(t_ref)| * t_ref^{d/2}`` and its growth exponent in N.

    ``generator(N)`` returns the family; the sup runs over points on the line
    through the profile centres, ``margin`` beyond the outermost ones for y
    and ``x_margin`` (default ``margin``) for x, so outgoing waves can be
    followed without a square grid.
    """
    Ns = _increasing(N_list, "N_list")
    consts = []
    d = None
    for N in Ns:
        f = generator(int(N))
        d = f.d
        lo, hi = _family_extent(f, margin)
        ys = axis_points(np.linspace(lo, hi, grid_points), d)
        xs = ys
        if x_margin is not None:
            xlo, xhi = _family_extent(f, x_margin)
            xs = axis_points(np.linspace(xlo, xhi, x_points or grid_points), d)
        s = sup_kernel_norm(f, t_ref, xs, ys, cfg)
        consts.append(s.value * t_ref ** (0.5 * d))
    consts = np.asarray(consts)
    slope, stderr, _, _ = fit_power_law(Ns, consts)
    return ScalingReport("N", Ns, consts, slope, stderr, limit, bool(slope <= limit), {"t_ref": t_ref, "d": d})


def tau_scaling_experiment(phi: Profile, tau0_list, lam: float = 1.0, branch: str = "plus",
                           slack: float = 0.2) -> ScalingReport:
    """Log-log slope of ``|f_12(tau0)|``; passes when at most ``-(d-1)/2 + slack``."""
    taus = _increasing(tau0_list, "tau0_list")
    probe = cross_term_decay_probe(phi, taus, lam, branch)
    _, stderr, _, _ = fit_power_law(taus, probe.values)
    limit = -0.5 * (phi.d - 1) + slack
    return ScalingReport("tau0", taus, probe.values, probe.slope, stderr, limit, bool(probe.slope <= limit),
                         {"lambda": lam, "branch": branch, "d": phi.d})


def alpha_scaling_experiment(phi: Profile, alpha_list, t_ref: float = 4.0, xs=None, ys=None,
                             cfg: QuadratureConfig | None = None, tolerance: float = 0.2) -> ScalingReport:
    """``sup |diff kernel| / alpha`` as alpha shrinks; passes when the spread is within ``tolerance``."""
    alphas = _increasing(alpha_list, "alpha_list")
    if np.any(alphas <= 0) or np.any(alphas >= 1):
        raise ValueError("alpha values must lie in (0, 1)")
    d = phi.d
    if xs is None:
        c = float(phi.tau_vec[0])
        xs = axis_points(np.linspace(c - 4, c + 4, 17), d)
    ys = xs if ys is None else ys
    ratios = []
    for a in alphas:
        s = sup_kernel_norm(ProfileFamily.single(phi, float(a)), t_ref, xs, ys, cfg)
        ratios.append(s.value / a)
    ratios = np.asarray(ratios)
    spread = float(ratios.max() / ratios.min() - 1.0)
    slope, stderr, _, _ = fit_power_law(alphas, ratios * alphas)
    return ScalingReport("alpha", alphas, ratios, slope, stderr, tolerance, bool(spread <= tolerance),
                         {"spread": spread, "t_ref": t_ref})


def translated_generator(phi: Profile, tau_for_N):
    """Family generator placing N copies of ``phi`` at spacing ``tau_for_N(N)`` along e1."""

    def gen(N: int) -> ProfileFamily:
        return translated_family(phi, N, float(tau_for_N(N)))

    return gen

