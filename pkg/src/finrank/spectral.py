"""Boundary values of profile resolvent matrix elements and the weighted matrix system.

``F[i, j](lam^2 +/- i0) = <R0(lam^2 +/- i0) phi_j, phi_i>`` is computed from the
radial density ``g(rho) = rho^{d-1} int_S phi_j^(rho w) conj(phi_i^(rho w)) dw``:

    F = PV int g(rho) / (rho^2 - lam^2) drho  +/-  i pi g(lam) / (2 lam).

With weights ``w_j`` the perturbation is ``sum_j w_j <., phi_j> phi_j``; the
matrix system is ``A = I + diag(w) F``, ``G = A^{-1}``, and the perturbed
resolvent is ``R = R0 - sum_ij (G diag(w))_ij (R0 phi_i) <R0 ., phi_j>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .convolution import scaled_convolution
from .profiles import Profile, ProfileFamily, translate
from .quadrature import CauchyRule, QuadratureError, composite_gl, gauss_legendre, panel_edges
from .special import branch_sign

__all__ = [
    "BorelValue",
    "AKSystem",
    "NeumannExpansion",
    "ScanResult",
    "ProbeResult",
    "SingularMatrixError",
    "NeumannDivergenceError",
    "BorelEngine",
    "borel_transform",
    "borel_matrix",
    "borel_tables",
    "ak_system",
    "ak_inverse_neumann",
    "spectral_condition_scan",
    "member_margins",
    "cross_term_decay_probe",
    "spreading_threshold",
    "resolvent_apply",
    "select_lambda0",
]


class SingularMatrixError(ArithmeticError):
    def __init__(self, lam: float, minors):
        super().__init__(f"matrix I + diag(w) F is singular at lambda = {lam:.6g}")
        self.lam = lam
        self.minors = minors


class NeumannDivergenceError(ArithmeticError):
    def __init__(self, radius_bound: float):
        super().__init__(f"row-sum bound {radius_bound:.4g} >= 1; expansion refused")
        self.radius_bound = radius_bound


@dataclass(frozen=True)
class BorelValue:
    lam: float
    branch: str
    value: complex
    method: str


# ---------------------------------------------------------------------------
# sphere rules


def _frame(axis: np.ndarray):
    a = axis / np.linalg.norm(axis)
    helper = np.eye(3)[int(np.argmin(np.abs(a)))]
    u = np.cross(a, helper)
    u /= np.linalg.norm(u)
    return a, u, np.cross(a, u)


def _sphere_rule(d: int, axis: np.ndarray, bandwidth: float, axisymmetric: bool):
    """Directions (M, d) and weights (M,) integrating over the unit sphere."""
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if d == 2:
        n = 1 if axisymmetric else int(math.ceil(bandwidth)) + 16
        theta = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        a = axis / np.linalg.norm(axis)
        b = np.array([-a[1], a[0]])
        dirs = np.cos(theta)[:, None] * a[None, :] + np.sin(theta)[:, None] * b[None, :]
        return dirs, np.full(n, 2.0 * math.pi / n)
    if d == 3:
        nu = int(math.ceil(0.5 * bandwidth)) + 16
        u, wu = gauss_legendre(nu)
        n_az = 1 if axisymmetric else int(math.ceil(bandwidth)) + 16
        az = 2.0 * math.pi * np.arange(n_az) / n_az
        a, e1, e2 = _frame(axis)
        s = np.sqrt(1.0 - u * u)
        dirs = (
            u[:, None, None] * a[None, None, :]
            + (s[:, None] * np.cos(az)[None, :])[:, :, None] * e1[None, None, :]
            + (s[:, None] * np.sin(az)[None, :])[:, :, None] * e2[None, None, :]
        ).reshape(-1, 3)
        w = (wu[:, None] * np.full(n_az, 2.0 * math.pi / n_az)[None, :]).ravel()
        return dirs, w
    raise NotImplementedError("matrix elements are available for d <= 3")


def _is_parallel(v: np.ndarray, axis: np.ndarray) -> bool:
    if not np.any(v):
        return True
    return abs(abs(float(v @ axis)) - float(np.linalg.norm(v))) <= 1e-12 * float(np.linalg.norm(v))


def _pair_axis(pi: Profile, pj: Profile):
    shift = pj.tau_vec - pi.tau_vec
    for v in (shift, pj.k_vec, pi.k_vec):
        if np.any(v):
            axis = v / np.linalg.norm(v)
            break
    else:
        axis = np.eye(pi.d)[0]
    e1 = np.eye(pi.d)[0]
    symmetric = all(_is_parallel(v, axis) for v in (shift, pj.k_vec, pi.k_vec))
    for p in (pi, pj):
        if p.shape.radial:
            continue
        if p.shape.kind == "zero_mean" and _is_parallel(e1, axis):
            continue
        symmetric = False
    return axis, symmetric


def _spectral_support(pi: Profile, pj: Profile) -> tuple[float, float]:
    lo_i, hi_i = pi.spectral_interval
    lo_j, hi_j = pj.spectral_interval
    return max(lo_i, lo_j), min(hi_i, hi_j)


# ---------------------------------------------------------------------------
# radial route


class BorelEngine:
    """Vectorised ``lam * F[i, j]`` for one ordered pair of profiles.

    ``parts(lams)`` returns ``(lam * PV, g(lam))``; the branch value is
    ``lam * F = lam * PV + i pi s g(lam) / 2``.  Because ``g`` extends to
    negative radii with parity ``(-1)^{d-1}``, ``lam * PV`` equals
    ``[P(lam) - P(-lam)] / 2`` with ``P(p) = PV int g / (rho - p)``, and
    subtracting ``g(+/-lam)`` keeps both integrands smooth down to lam = 0.
    """

    def __init__(self, pi: Profile, pj: Profile, n: int = 16, refine: int = 0):
        if pi.d != pj.d:
            raise ValueError("profiles live in different dimensions")
        self.pi, self.pj, self.d = pi, pj, pi.d
        self.pair_disjoint = pi.fourier_radius is not None and pj.fourier_radius is not None and (
            float(np.linalg.norm(pi.k_vec - pj.k_vec)) >= pi.fourier_radius + pj.fourier_radius
        )
        a, b = _spectral_support(pi, pj)
        self.empty = self.pair_disjoint or not b > a
        if self.empty:
            return
        shift = float(np.linalg.norm(pj.tau_vec - pi.tau_vec))
        width = min(pi.shape.fourier_panel_width, pj.shape.fourier_panel_width)
        if shift > 0:
            width = min(width, 2.0 / shift)
        width *= 0.5**refine
        if pi.fourier_radius is None or pj.fourier_radius is None:
            # soft cut-off: pad by a panel so a pole at the nominal cut-off stays interior
            a, b = max(0.0, a - width), b + width
        self.a, self.b = a, b
        self.rule = CauchyRule(a, b, width, n)
        axis, symmetric = _pair_axis(pi, pj)
        scale = max(0.5 / pi.shape.fourier_panel_width, 0.5 / pj.shape.fourier_panel_width)
        kk = float(np.linalg.norm(pi.k_vec)) + float(np.linalg.norm(pj.k_vec))
        bandwidth = b * (shift + scale * scale * kk) * 2.0**refine
        self.dirs, self.sphere_w = _sphere_rule(self.d, axis, bandwidth, symmetric)
        self.values = [self.density(x)[:, None] for x in self.rule.nodes]

    def density(self, rho) -> np.ndarray:
        """``g(rho)`` for rho >= 0."""
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        out = np.empty(len(rho), dtype=complex)
        step = max(1, 200000 // len(self.sphere_w))
        for start in range(0, len(rho), step):
            r = rho[start:start + step]
            pts = (r[:, None, None] * self.dirs[None, :, :]).reshape(-1, self.d)
            q = self.pj.fourier_transform(pts) * np.conj(self.pi.fourier_transform(pts))
            out[start:start + step] = (q.reshape(len(r), -1) @ self.sphere_w) * r ** (self.d - 1)
        return out

    def parts(self, lams) -> tuple[np.ndarray, np.ndarray]:
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        if self.empty:
            z = np.zeros(len(lams), dtype=complex)
            return z, z.copy()
        g = self.density(lams)
        parity = 1.0 if self.d % 2 == 1 else -1.0
        plus = self.rule.pv(self.values, g[:, None], lams)[:, 0]
        minus = self.rule.pv(self.values, parity * g[:, None], -lams)[:, 0]
        return 0.5 * (plus - minus), g

    def scaled(self, lams, sign: int) -> np.ndarray:
        pv, g = self.parts(lams)
        return pv + 0.5j * math.pi * sign * g


def _pair_parts(pi: Profile, pj: Profile, lams, tol: float):
    """Converged ``(lam * PV, g(lam))``: 16- and 20-point rules must agree to ``tol``."""
    history = []
    for refine in range(3):
        e1 = BorelEngine(pi, pj, 16, refine)
        if e1.empty:
            return e1.parts(lams)
        e2 = BorelEngine(pi, pj, 20, refine)
        pv1, g1 = e1.parts(lams)
        pv2, g2 = e2.parts(lams)
        scale = np.maximum(1.0, np.abs(pv2) + np.abs(g2))
        err = float(np.max(np.abs(pv1 - pv2) / scale))
        history.append(err)
        if err <= tol:
            return pv2, g2
    raise QuadratureError("matrix element did not converge", history=history)


def _position_space(pi: Profile, pj: Profile, lam: float, sign: int) -> complex:
    """``int conj(phi_i) R0 phi_j`` with the convolution done in position space."""
    if pi.d == 1:
        R = pi.shape.spatial_radius
        c = float(pi.tau_vec[0])
        width = min(pi.shape.panel_width, 1.0 / max(lam, 1e-3))
        if np.any(pi.k_vec):
            width = min(width, 2.0 / abs(float(pi.k_vec[0])))
        x, w = composite_gl(panel_edges(c - R, c + R, width), 16)
        h = scaled_convolution(pj, [lam], x, sign)[0] / lam
        return complex(np.sum(w * np.conj(pi.eval(x)) * h))
    if pi.d == 3 and pj.is_radial:
        shift = pi.tau_vec - pj.tau_vec
        D = float(np.linalg.norm(shift))
        R = pi.shape.spatial_radius
        lo, hi = max(0.0, D - R), D + R
        r, wr = composite_gl(panel_edges(lo, hi, 0.5), 16)
        axis = shift if D > 0 else np.eye(3)[0]
        dirs, ws = _sphere_rule(3, axis, 2.0 * R + 16, pi.shape.radial)
        h = scaled_convolution(pj, [lam], pj.tau_vec[None, :] + r[:, None] * np.eye(3)[0][None, :], sign)[0] / lam
        total = 0.0j
        for k in range(len(r)):
            pts = pj.tau_vec[None, :] + r[k] * dirs
            total += wr[k] * r[k] ** 2 * h[k] * np.sum(ws * np.conj(pi.eval(pts)))
        return complex(total)
    raise NotImplementedError("position-space route covers d = 1 and radial d = 3 profiles")


def borel_transform(
    pi: Profile, pj: Profile, lam: float, branch="plus", method: str = "radial_pv", tol: float = 1e-11
) -> BorelValue:
    """``<R0(lam^2 +/- i0) phi_j, phi_i>``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    sign = branch_sign(branch)
    name = "plus" if sign > 0 else "minus"
    if method == "radial_pv":
        pv, g = _pair_parts(pi, pj, [lam], tol)
        value = (pv[0] + 0.5j * math.pi * sign * g[0]) / lam
    elif method == "position_space":
        value = _position_space(pi, pj, lam, sign)
    else:
        raise ValueError(f"unknown method {method!r}")
    return BorelValue(float(lam), name, complex(value), method)


def borel_tables(f: ProfileFamily, lams, tol: float = 1e-11) -> tuple[np.ndarray, np.ndarray]:
    """``(lam * PV, g)`` arrays of shape (L, N, N) for the whole family.

    The branch matrices are ``lam F^s = PV + i pi s g / 2``; a Fourier-disjoint
    family gets exact zeros off the diagonal.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    N = f.N
    pv = np.zeros((len(lams), N, N), dtype=complex)
    g = np.zeros((len(lams), N, N), dtype=complex)
    disjoint = f.is_fourier_disjoint
    for i in range(N):
        for j in range(i, N):
            if i != j and disjoint:
                continue
            a, b = _pair_parts(f.members[i], f.members[j], lams, tol)
            pv[:, i, j], g[:, i, j] = a, b
            if i != j:
                # swapping the pair conjugates g, and PV is real-linear
                pv[:, j, i], g[:, j, i] = np.conj(a), np.conj(b)
    return pv, g


def branch_matrices(pv: np.ndarray, g: np.ndarray, lams, sign: int) -> np.ndarray:
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    return (pv + 0.5j * math.pi * sign * g) / lams[:, None, None]


# ---------------------------------------------------------------------------
# matrix system


@dataclass(frozen=True)
class AKSystem:
    lam: float
    branch: str
    F: np.ndarray
    weights: np.ndarray
    A: np.ndarray
    G: np.ndarray
    det_A: complex
    margin: float
    dominance_margin: float

    @property
    def coefficients(self) -> np.ndarray:
        """``G diag(w)``: the coefficients of ``(R0 phi_i) <R0 ., phi_j>`` in R0 - R."""
        return self.G * self.weights[None, :]

    @property
    def inverse_residual(self) -> float:
        N = len(self.weights)
        return float(np.max(np.abs(self.G @ self.A - np.eye(N)).sum(axis=1))) if N else 0.0


def _leading_minors(A: np.ndarray) -> list[complex]:
    return [complex(np.linalg.det(A[:k, :k])) for k in range(1, len(A) + 1)]


def ak_system(F: np.ndarray, weights, lam: float, branch="plus") -> AKSystem:
    w = np.asarray(weights, dtype=float)
    N = len(w)
    sign = branch_sign(branch)
    A = np.eye(N, dtype=complex) + w[:, None] * F
    det = complex(np.linalg.det(A)) if N else 1.0 + 0.0j
    if abs(det) < 1e-12:
        raise SingularMatrixError(lam, _leading_minors(A))
    G = np.linalg.inv(A) if N else np.zeros((0, 0), dtype=complex)
    if N:
        off = np.abs(A).sum(axis=1) - np.abs(np.diag(A))
        dom = float(np.min(np.abs(np.diag(A)) - off))
    else:
        dom = 1.0
    return AKSystem(
        lam=float(lam),
        branch="plus" if sign > 0 else "minus",
        F=F,
        weights=w,
        A=A,
        G=G,
        det_A=det,
        margin=abs(det),
        dominance_margin=dom,
    )


def borel_matrix(f: ProfileFamily, lam: float, branch="plus", tol: float = 1e-11) -> AKSystem:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    sign = branch_sign(branch)
    pv, g = borel_tables(f, [lam], tol)
    F = branch_matrices(pv, g, [lam], sign)[0]
    return ak_system(F, f.weight_vector, lam, branch)


@dataclass(frozen=True)
class NeumannExpansion:
    g_phi: complex
    F_tau0: np.ndarray
    terms_used: int
    radius_bound: float
    inverse: np.ndarray


def ak_inverse_neumann(sys: AKSystem, max_terms: int = 10000) -> NeumannExpansion:
    """``A^{-1} = sum_n (-g F_off)^n g`` with ``g = 1 / A_11`` and ``F_off`` the off-diagonal of A."""
    A = sys.A
    diag = np.diag(A)
    if np.max(np.abs(diag - diag[0])) > 1e-8 * abs(diag[0]):
        raise ValueError("Neumann expansion needs equal diagonal entries (translates of one profile)")
    g = 1.0 / diag[0]
    off = A - np.diag(diag)
    step = -g * off
    radius = float(np.max(np.abs(g * off).sum(axis=1))) if len(A) else 0.0
    if radius >= 1.0:
        raise NeumannDivergenceError(radius)
    term = g * np.eye(len(A), dtype=complex)
    total = term.copy()
    used = 1
    while used < max_terms:
        term = step @ term
        if np.max(np.abs(term).sum(axis=1)) <= 1e-12 * abs(g):
            break
        total += term
        used += 1
    return NeumannExpansion(complex(g), off, used, radius, total)


# ---------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class ScanResult:
    c0_est: float
    argmin_lam: float
    argmin_branch: str
    lams: np.ndarray = field(repr=False)
    margins: dict = field(repr=False)
    dominance: dict = field(repr=False)


def _margins_on_grid(f: ProfileFamily, lams, tol):
    lams = np.asarray(lams, dtype=float)
    w = f.weight_vector
    margins, dominance = {}, {}
    if f.N == 0 or not np.any(w):
        for b in ("plus", "minus"):
            margins[b] = np.ones(len(lams))
            dominance[b] = np.ones(len(lams))
        return margins, dominance
    pv, g = borel_tables(f, lams, tol)
    for b, s in (("plus", 1), ("minus", -1)):
        F = branch_matrices(pv, g, lams, s)
        A = np.eye(f.N)[None, :, :] + w[None, :, None] * F
        margins[b] = np.abs(np.linalg.det(A))
        d = np.abs(np.diagonal(A, axis1=1, axis2=2))
        dominance[b] = np.min(d - (np.abs(A).sum(axis=2) - d), axis=1)
    return margins, dominance


def spectral_condition_scan(f: ProfileFamily, lams, tol: float = 1e-11) -> ScanResult:
    """Smallest ``|det(I + diag(w) F^{+/-})|`` over the grid and both branches."""
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 0) or np.any(np.diff(lams) <= 0):
        raise ValueError("lambda grid must be positive and strictly increasing")
    margins, dominance = _margins_on_grid(f, lams, tol)
    best = (math.inf, float(lams[0]), "plus")
    for b in ("plus", "minus"):
        k = int(np.argmin(margins[b]))
        if margins[b][k] < best[0]:
            best = (float(margins[b][k]), float(lams[k]), b)
    return ScanResult(best[0], best[1], best[2], lams, margins, dominance)


def member_margins(f: ProfileFamily, lams, tol: float = 1e-11) -> np.ndarray:
    """``min over the grid and branches of |1 + w_j f_jj|`` for every member."""
    lams = np.asarray(lams, dtype=float)
    out = np.empty(f.N)
    for j, (p, w) in enumerate(zip(f.members, f.weights)):
        pv, g = _pair_parts(p, p, lams, tol)
        worst = math.inf
        for s in (1, -1):
            val = np.abs(1.0 + w * (pv + 0.5j * math.pi * s * g) / lams)
            worst = min(worst, float(np.min(val)))
        out[j] = worst
    return out


@dataclass(frozen=True)
class ProbeResult:
    tau0: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float


def cross_term_decay_probe(phi: Profile, tau0_list, lam: float, branch="plus", tol: float = 1e-11) -> ProbeResult:
    """``|<R0 phi(. - tau0 e1), phi>|`` along the list, with the log-log slope."""
    taus = np.asarray(tau0_list, dtype=float)
    if np.any(np.diff(taus) <= 0):
        raise ValueError("tau0 list must be increasing")
    e1 = np.eye(phi.d)[0]
    vals = np.array(
        [abs(borel_transform(phi, translate(phi, t * e1), lam, branch, tol=tol).value) for t in taus]
    )
    pos = taus > 0
    if np.count_nonzero(pos) >= 2:
        slope, intercept = np.polyfit(np.log(taus[pos]), np.log(vals[pos]), 1)
    else:
        slope, intercept = math.nan, math.nan
    return ProbeResult(taus, vals, float(slope), float(intercept))


def spreading_threshold(phi: Profile, N: int, lams, weight: float = 1.0, tau_ref: float = 8.0,
                        target: float = 0.5) -> float:
    """Empirical separation making every row of ``g F_off`` sum to at most ``target``.

    Calibrates ``|f_12(tau)| <= C1 tau^{-(d-1)/2}`` at ``tau_ref`` (worst case over
    the grid and both branches) and ``c0 = min |1 + w f_11|``, then solves
    ``(N - 1) w C1 tau^{-(d-1)/2} = target * c0``.
    """
    if phi.d < 2:
        raise ValueError("cross terms do not decay for d = 1")
    if N < 2:
        return 0.0
    lams = np.asarray(lams, dtype=float)
    e1 = np.eye(phi.d)[0]
    pv, g = _pair_parts(phi, translate(phi, tau_ref * e1), lams, 1e-11)
    pv0, g0 = _pair_parts(phi, phi, lams, 1e-11)
    expo = 0.5 * (phi.d - 1)
    c1 = max(float(np.max(np.abs(pv + 0.5j * math.pi * s * g) / lams)) for s in (1, -1)) * tau_ref**expo
    c0 = min(float(np.min(np.abs(1.0 + weight * (pv0 + 0.5j * math.pi * s * g0) / lams))) for s in (1, -1))
    return float(((N - 1) * weight * c1 / (target * c0)) ** (1.0 / expo))


# ---------------------------------------------------------------------------
# resolvent on a grid


def _complex_wavenumber(z: complex) -> complex:
    k = np.sqrt(complex(z))
    return k if k.imag > 0 else -k


def resolvent_apply(f: ProfileFamily, z: complex, x, g) -> np.ndarray:
    """``R(z) g`` on a uniform d = 1 grid (trapezoid rule, dense free kernel)."""
    z = complex(z)
    if z.imag == 0 and z.real >= 0:
        raise ValueError("z must lie off [0, inf)")
    if f.N and f.d != 1:
        raise NotImplementedError("grid resolvent is implemented for d = 1")
    x = np.asarray(x, dtype=float)
    h = x[1] - x[0]
    w = np.full(len(x), h)
    w[0] = w[-1] = 0.5 * h
    k = _complex_wavenumber(z)
    K = 0.5j / k * np.exp(1j * k * np.abs(x[:, None] - x[None, :]))
    g = np.asarray(g)
    r0g = K @ (w * g)
    if f.N == 0:
        return r0g
    phis = np.array([m.eval(x) for m in f.members])
    hs = (K @ (w[:, None] * phis.T)).T
    F = np.conj(phis) @ (w[:, None] * hs.T)
    A = np.eye(f.N) + f.weight_vector[:, None] * F
    det = np.linalg.det(A)
    if abs(det) < 1e-12:
        raise SingularMatrixError(abs(z) ** 0.5, _leading_minors(A))
    C = np.linalg.solve(A, np.diag(f.weight_vector))
    pair = np.conj(phis) @ (w * r0g)
    return r0g - hs.T @ (C @ pair)


def select_lambda0(f: ProfileFamily, tol: float = 0.1, floor: float = 1e-4) -> float:
    """Largest ``lam0 = 2^{-k}`` below which the low-energy regime holds on [lam0/4, lam0].

    Regime test for the first member: d = 1 with nonzero mean, ``lam * F`` within
    ``tol`` of its limit; otherwise ``F`` varies by at most ``tol`` relative.
    """
    if f.N == 0:
        return 1.0
    p = f.members[0]
    lam0 = 1.0
    while lam0 > floor:
        grid = np.array([0.25 * lam0, 0.5 * lam0, lam0])
        pv, g = _pair_parts(p, p, grid, 1e-11)
        if p.d == 1 and abs(p.mean) > 1e-8:
            scaled = pv + 0.5j * math.pi * g
            limit = 0.5j * abs(p.mean) ** 2
            ok = np.all(np.abs(scaled - limit) <= tol * abs(limit))
        else:
            F = (pv + 0.5j * math.pi * g) / grid
            ok = np.all(np.abs(F - F[0]) <= tol * abs(F[0]))
        if ok:
            return lam0
        lam0 *= 0.5
    return floor
