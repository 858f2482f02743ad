"""Perturbation profiles: normalised, decaying functions on R^d and families of them.

A :class:`Profile` is ``phase * exp(i k.x) * f(x - tau)`` where ``f`` is a real
base shape with a closed-form Fourier transform.  The Fourier transform uses the
unitary convention ``(2 pi)^{-d/2} int exp(-i xi.x) phi(x) dx``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .quadrature import QuadratureError, composite_gl, panel_edges
from .special import bessel_j0

__all__ = [
    "Shape",
    "GaussianShape",
    "ZeroMeanShape",
    "BandLimitedShape",
    "Profile",
    "ProfileFamily",
    "make_gaussian_profile",
    "make_zero_mean_profile",
    "make_band_limited_profile",
    "translate",
    "modulate",
    "fourier_transform",
    "gram_matrix",
    "inner_product",
    "verify_decay",
    "fourier_disjoint",
    "translated_family",
    "modulated_family",
    "trace_class_tail",
]


def _as_points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim <= 1 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != d:
        raise ValueError(f"expected points with last axis {d}, got shape {x.shape}")
    return x


def _sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


# ---------------------------------------------------------------------------
# base shapes


@dataclass(frozen=True)
class Shape:
    d: int

    kind = "shape"
    radial = False

    def value(self, x: np.ndarray) -> np.ndarray:  # x: (..., d)
        raise NotImplementedError

    def ft(self, xi: np.ndarray) -> np.ndarray:  # xi: (..., d)
        raise NotImplementedError

    def radial_value(self, r):
        raise NotImplementedError(f"{self.kind} is not radial")

    def radial_ft(self, rho):
        raise NotImplementedError(f"{self.kind} is not radial")

    @property
    def spatial_radius(self) -> float:
        """Radius outside which |f| is below about 1e-14."""
        raise NotImplementedError

    @property
    def fourier_cutoff(self) -> float:
        """Radius outside which |f^|^2 is below about 1e-17."""
        raise NotImplementedError

    @property
    def fourier_radius(self) -> float | None:
        return None

    @property
    def panel_width(self) -> float:
        """Spatial panel width that resolves the shape."""
        raise NotImplementedError

    @property
    def fourier_panel_width(self) -> float:
        """Frequency panel width that resolves the transform."""
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianShape(Shape):
    width: float = 1.0

    kind = "gaussian"
    radial = True

    def radial_value(self, r):
        w = self.width
        return (math.pi * w * w) ** (-self.d / 4.0) * np.exp(-0.5 * np.asarray(r) ** 2 / (w * w))

    def radial_ft(self, rho):
        w = self.width
        return (w * w / math.pi) ** (self.d / 4.0) * np.exp(-0.5 * (w * np.asarray(rho)) ** 2)

    def value(self, x):
        return self.radial_value(np.linalg.norm(x, axis=-1))

    def ft(self, xi):
        return self.radial_ft(np.linalg.norm(xi, axis=-1)).astype(complex)

    @property
    def spatial_radius(self) -> float:
        return 8.5 * self.width

    @property
    def fourier_cutoff(self) -> float:
        return 6.6 / self.width

    @property
    def panel_width(self) -> float:
        return 0.5 * self.width

    @property
    def fourier_panel_width(self) -> float:
        return 0.5 / self.width

    def params(self) -> dict:
        return {"width": self.width}


@dataclass(frozen=True)
class ZeroMeanShape(Shape):
    """First coordinate times a Gaussian; odd in x_1, so its integral vanishes."""

    width: float = 1.0

    kind = "zero_mean"

    def value(self, x):
        w = self.width
        c = (math.pi * w * w) ** (-self.d / 4.0) * math.sqrt(2.0) / w
        return c * x[..., 0] * np.exp(-0.5 * np.sum(x * x, axis=-1) / (w * w))

    def ft(self, xi):
        w = self.width
        c = (w * w / math.pi) ** (self.d / 4.0) * math.sqrt(2.0) * w
        return -1j * c * xi[..., 0] * np.exp(-0.5 * w * w * np.sum(xi * xi, axis=-1))

    @property
    def spatial_radius(self) -> float:
        return 9.0 * self.width

    @property
    def fourier_cutoff(self) -> float:
        return 7.0 / self.width

    @property
    def panel_width(self) -> float:
        return 0.5 * self.width

    @property
    def fourier_panel_width(self) -> float:
        return 0.5 / self.width

    def params(self) -> dict:
        return {"width": self.width}


def _bump(s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    out = np.zeros_like(s)
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


@lru_cache(maxsize=8)
def _band_limited_table(d: int) -> tuple[float, CubicSpline, float]:
    """Normalisation constant and radial position-space spline for radius 1."""
    rho, w = composite_gl(np.linspace(0.0, 1.0, 33), 16)
    norm2 = _sphere_area(d) * np.sum(w * _bump(rho) ** 2 * rho ** (d - 1))
    c = 1.0 / math.sqrt(norm2)
    fhat = c * _bump(rho)
    r_max = 640.0
    r = np.linspace(0.0, r_max, 25601)
    vals = np.empty_like(r)
    for start in range(0, len(r), 4000):
        rr = r[start:start + 4000]
        arg = np.outer(rr, rho)
        if d == 1:
            kern = 2.0 * np.cos(arg) / math.sqrt(2.0 * math.pi)
        elif d == 2:
            kern = bessel_j0(arg) * rho[None, :]
        elif d == 3:
            with np.errstate(invalid="ignore", divide="ignore"):
                sinc = np.where(arg > 0, np.sin(arg) / np.where(arg > 0, arg, 1.0), 1.0)
            kern = (2.0 * math.pi) ** -1.5 * 4.0 * math.pi * sinc * rho[None, :] ** 2
        else:
            raise ValueError("band-limited profiles are available for d <= 3")
        vals[start:start + 4000] = kern @ (w * fhat)
    return c, CubicSpline(r, vals), r_max


@dataclass(frozen=True)
class BandLimitedShape(Shape):
    """Radial shape whose Fourier transform is ``c exp(-1/(1-|xi/R|^2))`` on |xi| < R."""

    radius: float = 1.0

    kind = "band_limited"
    radial = True

    def radial_ft(self, rho):
        c, _, _ = _band_limited_table(self.d)
        R = self.radius
        return R ** (-self.d / 2.0) * c * _bump(np.asarray(rho, dtype=float) / R)

    def radial_value(self, r):
        _, spline, r_max = _band_limited_table(self.d)
        R = self.radius
        s = R * np.asarray(r, dtype=float)
        out = np.where(s <= r_max, spline(np.minimum(s, r_max)), 0.0)
        return R ** (self.d / 2.0) * out

    def value(self, x):
        return self.radial_value(np.linalg.norm(x, axis=-1))

    def ft(self, xi):
        return self.radial_ft(np.linalg.norm(xi, axis=-1)).astype(complex)

    @property
    def spatial_radius(self) -> float:
        return 600.0 / self.radius

    @property
    def fourier_cutoff(self) -> float:
        return self.radius

    @property
    def fourier_radius(self) -> float:
        return self.radius

    @property
    def panel_width(self) -> float:
        return 0.5 / self.radius

    @property
    def fourier_panel_width(self) -> float:
        return 0.2 * self.radius

    def params(self) -> dict:
        return {"fourier_radius": self.radius}


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class Profile:
    """``phase * exp(i k.x) * shape(x - tau)``, normalised in L^2."""

    d: int
    shape: Shape
    M: float
    delta: float
    tau: tuple = ()
    k: tuple = ()
    phase: complex = 1.0 + 0.0j
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not self.tau:
            object.__setattr__(self, "tau", (0.0,) * self.d)
        if not self.k:
            object.__setattr__(self, "k", (0.0,) * self.d)
        if len(self.tau) != self.d or len(self.k) != self.d:
            raise ValueError("tau and k must have length d")
        if not self.delta > self.d + 1.5:
            raise ValueError(f"decay exponent must exceed d + 3/2, got {self.delta}")

    # -- evaluation -----------------------------------------------------
    @property
    def tau_vec(self) -> np.ndarray:
        return np.asarray(self.tau, dtype=float)

    @property
    def k_vec(self) -> np.ndarray:
        return np.asarray(self.k, dtype=float)

    def eval(self, x) -> np.ndarray:
        x = _as_points(x, self.d)
        base = self.shape.value(x - self.tau_vec)
        return self.phase * np.exp(1j * (x @ self.k_vec)) * base

    __call__ = eval

    def fourier_transform(self, xi) -> np.ndarray:
        xi = _as_points(xi, self.d)
        shifted = xi - self.k_vec
        return self.phase * np.exp(-1j * (shifted @ self.tau_vec)) * self.shape.ft(shifted)

    # -- metadata -------------------------------------------------------
    @property
    def mean(self) -> complex:
        zero = np.zeros((1, self.d))
        return complex((2.0 * math.pi) ** (self.d / 2.0) * self.fourier_transform(zero)[0])

    @property
    def fourier_radius(self) -> float | None:
        return self.shape.fourier_radius

    @property
    def fourier_cutoff(self) -> float:
        return self.shape.fourier_cutoff

    @property
    def spectral_interval(self) -> tuple[float, float]:
        """Range of |xi| carrying the Fourier transform (to about 1e-17 in |.|^2)."""
        kk = float(np.linalg.norm(self.k_vec))
        c = self.fourier_cutoff
        return max(0.0, kk - c), kk + c

    @property
    def is_real(self) -> bool:
        return abs(np.imag(self.phase)) == 0.0 and not np.any(self.k_vec)

    @property
    def is_radial(self) -> bool:
        return self.shape.radial and not np.any(self.k_vec)

    def radial_value(self, r):
        """``phi(tau + r e)`` for a radial profile, as a function of r."""
        if not self.is_radial:
            raise NotImplementedError("profile is not radial about its centre")
        return self.phase * self.shape.radial_value(r)

    def conjugate(self) -> "Profile":
        return replace(self, k=tuple(-self.k_vec), phase=complex(np.conj(self.phase)))


def _decay_samples(p: Profile, count: int) -> np.ndarray:
    """Sample points along coordinate axes and diagonals through the origin and tau."""
    R = p.shape.spatial_radius + float(np.linalg.norm(p.tau_vec))
    s = np.linspace(-R, R, max(count, 100))
    dirs = [np.eye(p.d)[i] for i in range(p.d)]
    if p.d > 1:
        dirs.append(np.ones(p.d) / math.sqrt(p.d))
    pts = [s[:, None] * e[None, :] for e in dirs]
    if np.any(p.tau_vec):
        pts += [p.tau_vec[None, :] + s[:, None] * e[None, :] for e in dirs]
    return np.concatenate(pts, axis=0)


def _decay_sup(p: Profile, count: int) -> float:
    x = _decay_samples(p, count)
    weight = (1.0 + np.sum(x * x, axis=-1)) ** (p.delta / 2.0)
    return float(np.max(np.abs(p.eval(x)) * weight))


def verify_decay(p: Profile, sample_count: int = 2000) -> tuple[float, bool]:
    if sample_count < 100:
        raise ValueError("sample_count must be at least 100")
    m_est = _decay_sup(p, sample_count)
    return m_est, bool(m_est <= p.M)


def _with_decay_constant(p: Profile) -> Profile:
    return replace(p, M=1.25 * _decay_sup(p, 4001))


def _default_delta(d: int) -> float:
    return d + 2.0


def make_gaussian_profile(d: int, width: float = 1.0, delta: float | None = None) -> Profile:
    if not width > 0:
        raise ValueError("width must be positive")
    p = Profile(d, GaussianShape(d, width), M=1.0, delta=delta or _default_delta(d), label="gaussian")
    return _with_decay_constant(p)


def make_zero_mean_profile(d: int, width: float = 1.0, delta: float | None = None) -> Profile:
    if not width > 0:
        raise ValueError("width must be positive")
    p = Profile(d, ZeroMeanShape(d, width), M=1.0, delta=delta or _default_delta(d), label="zero_mean")
    return _with_decay_constant(p)


def make_band_limited_profile(d: int, fourier_radius: float = 1.0, delta: float | None = None) -> Profile:
    if not fourier_radius > 0:
        raise ValueError("fourier_radius must be positive")
    p = Profile(
        d, BandLimitedShape(d, fourier_radius), M=1.0, delta=delta or _default_delta(d), label="band_limited"
    )
    return _with_decay_constant(p)


def translate(p: Profile, tau) -> Profile:
    tau = np.broadcast_to(np.asarray(tau, dtype=float), (p.d,))
    if not np.any(tau):
        return p
    # phi(x - s) = phase e^{-ik.s} e^{ik.x} f(x - tau - s)
    phase = p.phase * np.exp(-1j * float(p.k_vec @ tau))
    moved = replace(p, tau=tuple(p.tau_vec + tau), phase=complex(phase))
    return _with_decay_constant(moved)


def modulate(p: Profile, k) -> Profile:
    k = np.broadcast_to(np.asarray(k, dtype=float), (p.d,))
    if not np.any(k):
        return p
    return replace(p, k=tuple(p.k_vec + k))


def fourier_transform(p: Profile, xi) -> np.ndarray:
    return p.fourier_transform(xi)


# ---------------------------------------------------------------------------
# inner products


def _overlap_box(p: Profile, q: Profile):
    lo = np.maximum(p.tau_vec - p.shape.spatial_radius, q.tau_vec - q.shape.spatial_radius)
    hi = np.minimum(p.tau_vec + p.shape.spatial_radius, q.tau_vec + q.shape.spatial_radius)
    return lo, hi


def _fourier_box(p: Profile, q: Profile):
    lo = np.maximum(p.k_vec - p.fourier_cutoff, q.k_vec - q.fourier_cutoff)
    hi = np.minimum(p.k_vec + p.fourier_cutoff, q.k_vec + q.fourier_cutoff)
    return lo, hi


def _tensor_integral(fp, fq, d: int, lo, hi, width: float, n: int) -> complex:
    """Tensor-product Gauss-Legendre value of ``int conj(fp) fq`` over a box."""
    rules = [composite_gl(panel_edges(lo[i], hi[i], width), n) for i in range(d)]
    if d == 1:
        x, w = rules[0]
        return complex(np.sum(w * np.conj(fp(x)) * fq(x)))
    x0, w0 = rules[0]
    grids = np.meshgrid(*[r[0] for r in rules[1:]], indexing="ij")
    rest = np.stack([g.ravel() for g in grids], axis=-1)
    rw = np.ones(len(rest))
    for g in np.meshgrid(*[r[1] for r in rules[1:]], indexing="ij"):
        rw = rw * g.ravel()
    total = 0.0j
    # one slab per first-axis node bounds memory
    for xi, wi in zip(x0, w0):
        pts = np.concatenate([np.full((len(rest), 1), xi), rest], axis=1)
        total += wi * np.sum(rw * np.conj(fp(pts)) * fq(pts))
    return complex(total)


def _spatial_plan(p: Profile, q: Profile):
    lo, hi = _overlap_box(p, q)
    width = min(p.shape.panel_width, q.shape.panel_width)
    kmax = max(float(np.linalg.norm(p.k_vec)), float(np.linalg.norm(q.k_vec)))
    if kmax > 0:
        width = min(width, 2.0 / kmax)
    return lo, hi, width


def _fourier_plan(p: Profile, q: Profile):
    lo, hi = _fourier_box(p, q)
    width = min(p.shape.fourier_panel_width, q.shape.fourier_panel_width)
    shift = float(np.linalg.norm(p.tau_vec - q.tau_vec))
    if shift > 0:
        width = min(width, 2.0 / shift)
    return lo, hi, width


def _node_count(lo, hi, width, d) -> float:
    return float(np.prod(np.maximum(hi - lo, 0.0) / width + 1.0)) if d else 0.0


def inner_product(p: Profile, q: Profile, tol: float = 1e-10, method: str = "auto") -> complex:
    """``int conj(p) q`` by tensor Gauss-Legendre in position or frequency space.

    ``method="auto"`` picks the side needing fewer panels.  The rule is applied
    with n and n + 4 nodes per panel; disagreement above ``tol`` halves the
    panels, and three failed rounds raise QuadratureError.
    """
    if p.d != q.d:
        raise ValueError("profiles live in different dimensions")
    if method not in ("auto", "spatial", "fourier"):
        raise ValueError(f"unknown method {method!r}")
    d = p.d
    spatial = _spatial_plan(p, q)
    fourier = _fourier_plan(p, q)
    if method == "auto":
        method = "spatial" if _node_count(*spatial, d) <= _node_count(*fourier, d) else "fourier"
    lo, hi, width = spatial if method == "spatial" else fourier
    if np.any(hi <= lo):
        return 0.0j
    fp, fq = (p.eval, q.eval) if method == "spatial" else (p.fourier_transform, q.fourier_transform)
    n0 = 10 if d == 3 else 16
    if d == 3 and method == "spatial":
        width = max(width, 1.0)
    history = []
    for _ in range(3):
        a = _tensor_integral(fp, fq, d, lo, hi, width, n0)
        b = _tensor_integral(fp, fq, d, lo, hi, width, n0 + 4)
        history.append((width, abs(a - b)))
        if abs(a - b) <= tol:
            return b
        width *= 0.5
    raise QuadratureError("inner product did not converge", method=method, history=history)


def gram_matrix(f: "ProfileFamily", tol: float = 1e-10, method: str = "auto") -> np.ndarray:
    n = len(f.members)
    g = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            # entry (i, j) = <phi_i, phi_j> = int phi_i conj(phi_j)
            v = inner_product(f.members[j], f.members[i], tol, method)
            g[i, j] = v
            g[j, i] = np.conj(v)
    return g


def gram_is_singular(g: np.ndarray, tol: float = 1e-8) -> bool:
    s = np.linalg.svd(g, compute_uv=False)
    return bool(s.min() <= tol * max(1.0, s.max()))


# ---------------------------------------------------------------------------
# families


def fourier_disjoint(members) -> bool:
    """Exact certificate: compact Fourier supports whose balls do not overlap."""
    members = list(members)
    if any(m.fourier_radius is None for m in members):
        return False
    for a, b in itertools.combinations(members, 2):
        gap = float(np.linalg.norm(a.k_vec - b.k_vec))
        if gap < a.fourier_radius + b.fourier_radius:
            return False
    return True


@dataclass(frozen=True)
class ProfileFamily:
    members: tuple
    weights: tuple
    L: float | None = None
    name: str = ""

    def __post_init__(self) -> None:
        members = tuple(self.members)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "weights", weights)
        if len(members) != len(weights):
            raise ValueError("one weight per member is required")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be non-negative")
        if len({m.d for m in members}) > 1:
            raise ValueError("members must share the dimension")

    @property
    def N(self) -> int:
        return len(self.members)

    @property
    def d(self) -> int:
        return self.members[0].d if self.members else 0

    @property
    def weight_vector(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    @property
    def tau0(self) -> float:
        if self.N < 2:
            return math.inf
        return min(
            float(np.linalg.norm(a.tau_vec - b.tau_vec))
            for a, b in itertools.combinations(self.members, 2)
        )

    @property
    def is_fourier_disjoint(self) -> bool:
        return fourier_disjoint(self.members)

    @property
    def is_real(self) -> bool:
        return all(m.is_real for m in self.members)

    @classmethod
    def single(cls, p: Profile, alpha: float = 1.0) -> "ProfileFamily":
        return cls((p,), (alpha,), name="rank-one")

    @classmethod
    def empty(cls) -> "ProfileFamily":
        return cls((), (), name="empty")


def translated_family(base: Profile, N: int, tau0: float, weight: float = 1.0) -> ProfileFamily:
    """Copies of ``base`` at ``j * tau0 * e1``, j = 0..N-1."""
    e1 = np.eye(base.d)[0]
    members = tuple(translate(base, j * tau0 * e1) for j in range(N))
    return ProfileFamily(members, (weight,) * N, name="translated")


def modulated_family(
    base: Profile, N: int, L: float = 4.0, weights: str | tuple = "dyadic", start: int = 1
) -> ProfileFamily:
    """``exp(i (L + 2j) x_1) base(x)`` for j = start..start+N-1.

    ``weights="dyadic"`` gives ``2^{-j}``; ``"ones"`` gives unit weights.
    """
    e1 = np.eye(base.d)[0]
    js = range(start, start + N)
    members = tuple(modulate(base, (L + 2 * j) * e1) for j in js)
    if weights == "dyadic":
        w = tuple(2.0 ** (-j) for j in js)
    elif weights == "ones":
        w = (1.0,) * N
    else:
        w = tuple(weights)
    return ProfileFamily(members, w, L=L, name="modulated")


def trace_class_tail(d: int, M: float, L: float, J: int, C: float = 1.0, terms: int = 4000) -> float:
    """``sum_{j > J} 2^{-j} M_j^{2[d/2]+6}`` with ``M_j = C M (L + 2j)^{[d/2]+1}``."""
    p = d // 2
    expo = 2 * p + 6
    js = np.arange(J + 1, J + 1 + terms, dtype=float)
    logs = -js * math.log(2.0) + expo * (math.log(C * M) + (p + 1) * np.log(L + 2 * js))
    return float(np.sum(np.exp(logs)))
