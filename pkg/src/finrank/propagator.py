"""Kernel of ``exp(-itH) - exp(-itH0)`` for ``H = -Delta + sum_j w_j <., phi_j> phi_j``.

Stone's formula with ``E = lam^2`` gives

    diff(t, x, y) = -(1 / (pi i)) int_0^inf exp(-i t lam^2) [S^+ - S^-](lam; x, y) dlam,
    S^s = sum_ij (lam h^s_i(x)) C^s_ij (lam h^s_{j*}(y)),
    C^s = (lam I + diag(w) lam F^s)^{-1} diag(w),

where ``h^s_i = R0(lam^2 + i s 0) phi_i`` and ``h^s_{j*} = R0(lam^2 + i s 0) conj(phi_j)``.
Every factor is finite at lam = 0 in d = 1, which is the reason for the grouping.
The two branches are combined before integrating: past the Fourier support of
the profiles ``S^+ - S^-`` decays like the transforms themselves, so the
lam-integral is effectively over a bounded interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .convolution import points_array, scaled_convolution
from .filon import (
    ExtrapolationError,
    PanelGrid,
    build_panels,
    filon_integrate,
    filon_weights,
    neville_zero,
)
from .kernels import free_propagator_kernel
from .profiles import Profile, ProfileFamily, trace_class_tail
from .quadrature import composite_gl, panel_edges
from .special import branch_sign
from .spectral import SingularMatrixError, borel_tables

__all__ = [
    "QuadratureConfig",
    "KernelSample",
    "KernelGrid",
    "DifferenceKernelEngine",
    "convolved_profile",
    "oscillatory_lambda_quadrature",
    "difference_kernel_grid",
    "rank_one_difference_kernel",
    "finite_rank_difference_kernel",
    "trace_class_difference_kernel",
    "full_propagator_kernel",
    "ExtrapolationError",
]

_LAM_FLOOR = 1e-12


@dataclass(frozen=True)
class QuadratureConfig:
    """Controls of the lam-quadrature.

    ``lambda0`` is a panel break separating the graded low-energy panels from
    the phase-budgeted ones; ``lambda_max`` truncates the lam-axis (the profiles'
    own Fourier cut-off is used when smaller).
    """

    lambda0: float = 0.5
    lambda_max: float = 40.0
    phase_budget: float = 0.5 * math.pi
    tol: float = 1e-8
    epsilon_schedule: tuple = (0.04, 0.02, 0.01, 0.005)
    max_panel_width: float = 0.05
    borel_tol: float = 1e-11

    def __post_init__(self) -> None:
        if not 0 < self.lambda0 < 1 <= self.lambda_max:
            raise ValueError("need 0 < lambda0 < 1 <= lambda_max")
        if not 0 < self.phase_budget <= 0.5 * math.pi + 1e-12:
            raise ValueError("phase_budget must lie in (0, pi/2]")
        eps = tuple(float(e) for e in self.epsilon_schedule)
        object.__setattr__(self, "epsilon_schedule", eps)
        if len(eps) < 2 or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon_schedule must be positive and strictly decreasing")
        if not self.tol > 0 or not self.max_panel_width > 0:
            raise ValueError("tol and max_panel_width must be positive")

    def halved(self) -> "QuadratureConfig":
        """Finer configuration used for self-consistency checks."""
        return QuadratureConfig(
            self.lambda0,
            2.0 * self.lambda_max,
            0.5 * self.phase_budget,
            self.tol,
            self.epsilon_schedule,
            0.5 * self.max_panel_width,
            self.borel_tol,
        )


@dataclass(frozen=True)
class KernelSample:
    t: float
    x: tuple
    y: tuple
    diff_value: complex
    free_value: complex
    err_est: float

    @property
    def full_value(self) -> complex:
        return self.free_value + self.diff_value


@dataclass(frozen=True)
class KernelGrid:
    """Difference-kernel values on a (t, x, y) product grid."""

    ts: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray  # (nt, nx, ny)
    err_est: np.ndarray  # (nt, nx, ny)
    nodes: int = field(default=0)


# ---------------------------------------------------------------------------
# oscillatory lam-quadrature


def _rotated_tail(func, lam_start: float, s: float, c: float, reg) -> complex:
    """``int_{lam_start}^inf func(lam) reg(lam) exp(i (s lam^2 + c lam)) dlam`` along a rotated ray.

    The ray ``lam_start + exp(i theta) rho`` with ``theta = sign(s) pi / 4``
    turns the oscillation into Gaussian decay; ``func`` and ``reg`` must accept
    complex arguments.
    """
    theta = math.copysign(0.25 * math.pi, s)
    direction = complex(math.cos(theta), math.sin(theta))
    a = abs(s)
    lin = max(math.sqrt(2.0) * a * lam_start - abs(c) / math.sqrt(2.0), 0.0)
    # decay exponent a rho^2 + lin rho reaches 45 at rho_max
    rho_max = (-lin + math.sqrt(lin * lin + 4.0 * a * 45.0)) / (2.0 * a)
    rho, w = composite_gl(panel_edges(0.0, rho_max, rho_max / 24.0), 16)
    lam = lam_start + direction * rho
    vals = func(lam) * reg(lam) * np.exp(1j * (s * lam * lam + c * lam))
    return complex(direction * np.sum(w * vals))


def oscillatory_lambda_quadrature(
    integrand,
    t: float,
    omega: tuple,
    cfg: QuadratureConfig | None = None,
    c: float = 0.0,
    regularizer: str = "gaussian",
    grade_to_zero: bool = False,
    breaks=(),
) -> tuple[complex, float]:
    """``int_omega integrand(lam) exp(-i t lam^2 + i c lam) dlam`` and an error estimate.

    ``omega = (a, b)`` with ``b`` possibly ``inf``.  A finite interval is a
    single Filon pass.  For an infinite one the integrand is damped by
    ``exp(-eps lam^2)`` (``regularizer="gaussian"``) or ``exp(-eps lam)``
    (``"linear"``), each damped integral is evaluated exactly through a rotated
    tail past ``max(a, lambda_max)`` (``integrand`` must then accept complex
    lam), and the values are extrapolated to eps = 0 over ``epsilon_schedule``
    (read in units of ``1/cut`` or ``1/cut^2``, ``cut`` the truncation point).
    Non-monotone convergence of the damped sequence raises ExtrapolationError.
    ``breaks`` are extra panel edges (kinks or fast transitions of the integrand).
    """
    cfg = cfg or QuadratureConfig()
    if t == 0:
        raise ValueError("t must be nonzero")
    s = -float(t)
    a, b = float(omega[0]), float(omega[1])
    if math.isfinite(b):
        grid = PanelGrid(
            build_panels(
                a, b, s, c, cfg.phase_budget, cfg.max_panel_width, breaks=breaks, grade_to_zero=grade_to_zero
            )
        )
        lam = np.maximum(grid.nodes, _LAM_FLOOR) if a == 0 else grid.nodes
        value, err = filon_integrate(grid, integrand(lam), s, c)
        return complex(value), float(err)

    star = -c / (2.0 * s)
    cut = max(a, cfg.lambda_max, 2.0 * abs(star) + 1.0)
    grid = PanelGrid(
        build_panels(a, cut, s, c, cfg.phase_budget, cfg.max_panel_width, breaks=breaks, grade_to_zero=grade_to_zero)
    )
    lam = np.maximum(grid.nodes, _LAM_FLOOR) if a == 0 else grid.nodes
    base = integrand(lam)
    weights = filon_weights(grid, s, c)
    # damping strengths are relative to the truncation point so eps * lam stays small where it matters
    eps = np.asarray(cfg.epsilon_schedule) / (cut * cut if regularizer == "gaussian" else cut)
    values, errs = [], []
    for e in eps:
        if regularizer == "gaussian":
            reg = lambda z, e=e: np.exp(-e * z * z)  # noqa: E731
        elif regularizer == "linear":
            reg = lambda z, e=e: np.exp(-e * z)  # noqa: E731
        else:
            raise ValueError(f"unknown regularizer {regularizer!r}")
        v, err = filon_integrate(grid, base * reg(lam), s, c, weights)
        v += _rotated_tail(integrand, cut, s, c, reg)
        values.append(v)
        errs.append(err)
    steps = np.abs(np.diff(values))
    if np.any(steps[1:] > steps[:-1] * (1.0 + 1e-6) + 1e-14):
        raise ExtrapolationError("regularised values do not converge monotonically", steps=steps)
    value, change = neville_zero(eps, values)
    return value, float(change + max(errs))


# ---------------------------------------------------------------------------
# convolutions


def convolved_profile(phi: Profile, branch, lam: float, x) -> complex | np.ndarray:
    """``(R0(lam^2 +/- i0) phi)(x)``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    pts = points_array(x, phi.d)
    vals = scaled_convolution(phi, [lam], pts, branch_sign(branch))[0] / lam
    if np.ndim(x) == 0 or (phi.d > 1 and np.ndim(x) == 1):
        return complex(vals[0])
    return vals


# ---------------------------------------------------------------------------
# kernel synthesis


def _family_cutoff(f: ProfileFamily) -> float:
    return max(m.spectral_interval[1] for m in f.members)


class DifferenceKernelEngine:
    """Node-cached synthesis of the difference kernel on x and y point sets.

    The lam-nodes are built for the largest |t| requested, so every smaller
    time reuses the same matrix solves and convolutions; only the Filon weights
    depend on t.
    """

    def __init__(self, f: ProfileFamily, xs, ys, t_max: float, cfg: QuadratureConfig | None = None):
        self.f = f
        self.cfg = cfg or QuadratureConfig()
        self.t_max = abs(float(t_max))
        if self.t_max == 0:
            raise ValueError("t_max must be nonzero")
        self.trivial = f.N == 0 or not np.any(f.weight_vector)
        d = f.d if f.N else (1 if np.ndim(xs) <= 1 else np.shape(xs)[-1])
        self.d = d
        self.xs = points_array(xs, d)
        self.ys = points_array(ys, d)
        if self.trivial:
            self.grid = None
            return
        self.lam_max = min(self.cfg.lambda_max, _family_cutoff(f))
        edges = build_panels(
            0.0,
            self.lam_max,
            -self.t_max,
            0.0,
            self.cfg.phase_budget,
            self.cfg.max_panel_width,
            breaks=(self.cfg.lambda0,),
            grade_to_zero=(d == 2),
        )
        self.grid = PanelGrid(edges)
        self.lams = np.maximum(self.grid.nodes, _LAM_FLOOR)
        self._prepare()

    def _prepare(self) -> None:
        f, lams = self.f, self.lams
        w = f.weight_vector
        pv, g = borel_tables(f, lams, self.cfg.borel_tol)
        N = f.N
        self.C = {}
        self.H = {}
        self.K = {}
        conj_members = [m.conjugate() for m in f.members]
        for s in (1, -1):
            scaled_F = pv + 0.5j * math.pi * s * g
            M = lams[:, None, None] * np.eye(N)[None, :, :] + w[None, :, None] * scaled_F
            det = np.abs(np.linalg.det(M)) / lams**N
            bad = np.nonzero(det < 1e-12)[0]
            if len(bad):
                raise SingularMatrixError(float(lams[bad[0]]), [complex(det[bad[0]])])
            self.C[s] = np.linalg.solve(M, np.broadcast_to(np.diag(w), M.shape).astype(complex))
            self.H[s] = np.stack([scaled_convolution(m, lams, self.xs, s) for m in f.members], axis=1)
            self.K[s] = np.stack([scaled_convolution(m, lams, self.ys, s) for m in conj_members], axis=1)

    def combined(self, node_slice: slice) -> np.ndarray:
        """``S^+ - S^-`` on a range of nodes; shape (nodes, nx, ny)."""
        out = None
        for s in (1, -1):
            H = self.H[s][node_slice]
            C = self.C[s][node_slice]
            K = self.K[s][node_slice]
            q = np.einsum("lix,lij->lxj", H, C)
            term = np.einsum("lxj,ljy->lxy", q, K)
            out = term if out is None else out - term
        return out

    def evaluate(self, ts) -> KernelGrid:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        nx, ny = len(self.xs), len(self.ys)
        values = np.zeros((len(ts), nx, ny), dtype=complex)
        errs = np.zeros((len(ts), nx, ny))
        if self.trivial:
            return KernelGrid(ts, self.xs, self.ys, values, errs, 0)
        if np.any(np.abs(ts) > self.t_max * (1 + 1e-12)) or np.any(ts == 0):
            raise ValueError("times must be nonzero and within the engine's t_max")
        weights = [filon_weights(self.grid, -t) for t in ts]
        P = self.grid.panels
        chunk = max(1, int(4e6 // max(1, nx * ny * 9)))
        for p0 in range(0, P, chunk):
            p1 = min(P, p0 + chunk)
            D = self.combined(slice(8 * p0, 8 * p1 + 1))
            idx = 8 * (np.arange(p1 - p0)[:, None]) + np.arange(9)[None, :]
            Dp = D[idx]  # (panels, 9, nx, ny)
            for k, (w8, w4) in enumerate(weights):
                q8 = np.einsum("pj,pjxy->pxy", w8[p0:p1], Dp)
                q4 = np.einsum("pj,pjxy->pxy", w4[p0:p1], Dp[:, ::2])
                values[k] += q8.sum(axis=0)
                errs[k] += np.abs(q8 - q4).sum(axis=0)
        # tail past the last node, bounded by the size of S^+ - S^- there
        last = np.abs(self.combined(slice(len(self.lams) - 1, len(self.lams)))[0])
        pref = -1.0 / (math.pi * 1j)
        for k, t in enumerate(ts):
            errs[k] = abs(pref) * (errs[k] + last / (2.0 * abs(t) * self.lam_max))
        return KernelGrid(ts, self.xs, self.ys, pref * values, errs, len(self.lams))


def difference_kernel_grid(f: ProfileFamily, ts, xs, ys, cfg: QuadratureConfig | None = None) -> KernelGrid:
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    engine = DifferenceKernelEngine(f, xs, ys, float(np.max(np.abs(ts))), cfg)
    return engine.evaluate(ts)


def _sample(f: ProfileFamily, t: float, x, y, cfg) -> KernelSample:
    if not t > 0:
        raise ValueError("t must be positive")
    d = f.d if f.N else int(np.size(x))
    xa = points_array(x, d)
    ya = points_array(y, d)
    grid = difference_kernel_grid(f, [t], xa, ya, cfg)
    r = float(np.linalg.norm(xa[0] - ya[0]))
    free = complex(free_propagator_kernel(d, t, r))
    return KernelSample(
        float(t),
        tuple(np.atleast_1d(xa[0]).tolist()),
        tuple(np.atleast_1d(ya[0]).tolist()),
        complex(grid.values[0, 0, 0]),
        free,
        float(grid.err_est[0, 0, 0]),
    )


def rank_one_difference_kernel(phi: Profile, alpha: float, t: float, x, y, cfg=None) -> KernelSample:
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return _sample(ProfileFamily.single(phi, alpha), t, x, y, cfg)


def finite_rank_difference_kernel(f: ProfileFamily, t: float, x, y, cfg=None) -> KernelSample:
    return _sample(f, t, x, y, cfg)


def trace_class_difference_kernel(
    f: ProfileFamily, t: float, x, y, J_max: int, cfg=None, tail_constant: float | None = None
) -> tuple[KernelSample, float]:
    """Sum of the first ``J_max`` rank-one kernels and a bound on the omitted tail.

    The tail bound is ``C * sum_{j > J_max} w_j M_j^{2[d/2]+6}`` with the
    modulation-dependent ``M_j`` of :func:`trace_class_tail`; ``C`` defaults to
    the ratio ``|first term| / (w_1 M_1^{2[d/2]+6})`` measured at this point.
    """
    if J_max < 1 or J_max > f.N:
        raise ValueError("J_max must lie in 1..N")
    if f.L is None:
        raise ValueError("trace-class families carry a modulation offset L")
    total = 0.0j
    err = 0.0
    first = None
    free = None
    for j in range(J_max):
        s = rank_one_difference_kernel(f.members[j], f.weights[j], t, x, y, cfg)
        total += s.diff_value
        err += s.err_est
        free = s.free_value
        if first is None:
            first = s
    d = f.d
    expo = 2 * (d // 2) + 6
    M = f.members[0].M
    if tail_constant is None:
        m1 = M * (f.L + 2.0) ** (d // 2 + 1)
        tail_constant = abs(first.diff_value) / (f.weights[0] * m1**expo)
    tail = tail_constant * trace_class_tail(d, M, f.L, J_max)
    sample = KernelSample(first.t, first.x, first.y, complex(total), free, float(err))
    return sample, float(tail)


def full_propagator_kernel(f: ProfileFamily, t: float, x, y, cfg=None) -> complex:
    return _sample(f, t, x, y, cfg).full_value
