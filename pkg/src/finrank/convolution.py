"""Free resolvent applied to a profile: ``lam * (R0(lam^2 +/- i0) phi)(x)``.

The factor ``lam`` keeps the d = 1 values finite as ``lam -> 0``.  Routes:

* d = 1, spatial: the kernel ``(i s / 2) exp(i s lam |x - y|)`` factorises on
  either side of ``x``, so cumulative Gauss-Legendre sums give every point at
  once (points are panel edges, so the kink is never inside a panel).
* d = 1, frequency: for profiles with compact Fourier support the transform
  ``phi^(xi) exp(i x xi) / (xi^2 - lam^2 -/+ i0)`` is integrated as two Cauchy
  principal values plus the delta terms.
* d = 2, 3, radial profiles: the spherical mean of the kernel over a sphere
  about the centre has a closed form (Graf's addition theorem for d = 2,
  ``sin(lam r<) exp(i lam r>) / (lam r< r>)`` for d = 3), leaving a 1-D
  cumulative integral in the radius.
"""

from __future__ import annotations

import math

import numpy as np

from .profiles import Profile
from .quadrature import CauchyRule, composite_gl, panel_edges
from .special import j0_y0

__all__ = ["scaled_convolution", "convolution", "points_array", "route_for"]

_CHUNK = 256
_FREQUENCY_ROUTE_RADIUS = 60.0


def points_array(points, d: int) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if d == 1:
        return x.reshape(-1)
    return x.reshape(-1, d)


def route_for(p: Profile) -> str:
    if p.d == 1:
        if p.fourier_radius is not None and p.shape.spatial_radius > _FREQUENCY_ROUTE_RADIUS:
            return "frequency"
        return "spatial"
    if p.d in (2, 3) and p.is_radial:
        if p.shape.spatial_radius > _FREQUENCY_ROUTE_RADIUS:
            raise NotImplementedError("slowly decaying radial profiles are only supported in d = 1")
        return "radial"
    raise NotImplementedError("d >= 2 needs a profile that is radial about its centre")


def scaled_convolution(p: Profile, lams, points, sign: int = 1, n: int = 16) -> np.ndarray:
    """``lam * h(lam, x)`` with ``h = R0(lam^2 + i sign 0) p``; shape (len(lams), len(points))."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if np.any(lams <= 0):
        raise ValueError("lambda must be positive")
    pts = points_array(points, p.d)
    route = route_for(p)
    out = np.empty((len(lams), len(pts)), dtype=complex)
    for start in range(0, len(lams), _CHUNK):
        lam = lams[start:start + _CHUNK]
        if route == "spatial":
            out[start:start + _CHUNK] = _spatial_d1(p, lam, pts, sign, n)
        elif route == "frequency":
            out[start:start + _CHUNK] = _frequency_d1(p, lam, pts, sign, n)
        else:
            r = np.linalg.norm(pts - p.tau_vec[None, :], axis=1)
            out[start:start + _CHUNK] = _radial(p, lam, r, sign, n)
    return out


def convolution(p: Profile, lams, points, sign: int = 1, n: int = 16) -> np.ndarray:
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    return scaled_convolution(p, lams, points, sign, n) / lams[:, None]


def _cumulative(vals: np.ndarray, n: int) -> np.ndarray:
    """Integral from the left end up to every panel edge; vals shape (L, panels * n)."""
    panels = vals.reshape(vals.shape[0], -1, n).sum(axis=2)
    return np.concatenate([np.zeros((vals.shape[0], 1), dtype=complex), np.cumsum(panels, axis=1)], axis=1)


def _spatial_d1(p: Profile, lam, x, sign, n):
    c = float(p.tau_vec[0])
    R = p.shape.spatial_radius
    a, b = c - R, c + R
    width = p.shape.panel_width
    kk = abs(float(p.k_vec[0]))
    if kk > 0:
        width = min(width, 2.0 / kk)
    width = min(width, 2.0 / float(np.max(lam)))
    edges = panel_edges(a, b, width, breaks=x)
    y, w = composite_gl(edges, n)
    fw = w * p.eval(y)
    e_minus = np.exp(-1j * sign * lam[:, None] * y[None, :]) * fw[None, :]
    e_plus = np.exp(1j * sign * lam[:, None] * y[None, :]) * fw[None, :]
    left = _cumulative(e_minus, n)
    right_total = _cumulative(e_plus, n)
    idx = np.clip(np.searchsorted(edges, x), 0, len(edges) - 1)
    # points left of the box see only the right integral and vice versa
    idx = np.where(x < a, 0, np.where(x > b, len(edges) - 1, idx))
    lower = left[:, idx]
    upper = right_total[:, -1][:, None] - right_total[:, idx]
    phase = np.exp(1j * sign * lam[:, None] * x[None, :])
    return 0.5j * sign * (phase * lower + upper / phase)


def _frequency_d1(p: Profile, lam, x, sign, n):
    k = float(p.k_vec[0])
    rad = p.fourier_radius
    a, b = k - rad, k + rad
    width = p.shape.fourier_panel_width
    span = float(np.max(np.abs(x - p.tau_vec[0]))) if len(x) else 0.0
    if span > 0:
        width = min(width, 2.0 / span)
    rule = CauchyRule(a, b, width, n)

    def f(xi):
        return p.fourier_transform(xi)[:, None] * np.exp(1j * np.outer(xi, x))

    values = [f(rule.nodes[0]), f(rule.nodes[1])]
    plus = rule.pv(values, f(lam), lam)
    minus = rule.pv(values, f(-lam), -lam)
    delta = 1j * math.pi * sign * (f(lam) + f(-lam))
    return (plus - minus + delta) / (2.0 * math.sqrt(2.0 * math.pi))


def _radial(p: Profile, lam, r, sign, n):
    R = p.shape.spatial_radius
    width = min(p.shape.panel_width, 2.0 / float(np.max(lam)))
    edges = panel_edges(0.0, R, width, breaks=r)
    s, w = composite_gl(edges, n)
    f = p.radial_value(s)
    idx = np.clip(np.searchsorted(edges, r), 0, len(edges) - 1)
    idx = np.where(r > R, len(edges) - 1, idx)
    ls = lam[:, None] * s[None, :]
    lr = lam[:, None] * r[None, :]
    if p.d == 3:
        inner = _cumulative(np.sin(ls) * (w * s * f)[None, :], n)
        outer = _cumulative(np.exp(1j * sign * ls) * (w * s * f)[None, :], n)
        a_part = inner[:, idx]
        b_part = outer[:, -1][:, None] - outer[:, idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (np.exp(1j * sign * lr) * a_part + np.sin(lr) * b_part) / r[None, :]
        at_centre = r == 0
        if np.any(at_centre):
            val[:, at_centre] = lam[:, None] * b_part[:, at_centre]
        return val
    # d = 2: h = (i s pi / 2) [H(lam r) int_0^r J0 f s + J0(lam r) int_r^inf H f s]
    j_s, y_s = j0_y0(ls)
    h_s = j_s + 1j * sign * y_s
    inner = _cumulative(j_s * (w * s * f)[None, :], n)
    outer = _cumulative(h_s * (w * s * f)[None, :], n)
    j_r, y_r = j0_y0(lr)
    with np.errstate(invalid="ignore"):
        h_r = j_r + 1j * sign * y_r
        val = h_r * inner[:, idx] + j_r * (outer[:, -1][:, None] - outer[:, idx])
    at_centre = r == 0
    if np.any(at_centre):
        val[:, at_centre] = outer[:, -1][:, None]
    return 0.5j * sign * math.pi * lam[:, None] * val
