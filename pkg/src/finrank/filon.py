"""Filon quadrature for ``int f(lam) exp(i (s lam^2 + c lam)) dlam``.

On each panel the smooth factor ``f`` is interpolated at the nine
Chebyshev-Lobatto points and integrated exactly against the quadratic phase.
Panels keep the phase excursion ``|beta| + |gamma|`` of the local phase
``beta u + gamma u^2`` (u in [-1, 1]) below a budget, so the moments
``int u^k exp(i (beta u + gamma u^2)) du`` follow from a short convergent
double series.  The five-point Lobatto subset gives an embedded error
estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erf

from .quadrature import QuadratureError

__all__ = [
    "DEGREE",
    "PanelGrid",
    "ExtrapolationError",
    "build_panels",
    "panel_grid",
    "filon_weights",
    "filon_integrate",
    "phase_moments",
    "fresnel_segment",
    "neville_zero",
]

DEGREE = 8
_SERIES_TERMS = 26


class ExtrapolationError(QuadratureError):
    """The regularised sequence did not settle as the regulariser went to zero."""


@lru_cache(maxsize=4)
def _lobatto(degree: int) -> np.ndarray:
    return -np.cos(np.pi * np.arange(degree + 1) / degree)


@lru_cache(maxsize=4)
def _inverse_vandermonde(degree: int) -> np.ndarray:
    u = _lobatto(degree)
    return np.linalg.inv(np.vander(u, degree + 1, increasing=True))


@lru_cache(maxsize=1)
def _series_table() -> np.ndarray:
    """``E[k, m, n] = int u^{k+m+2n} du / (m! n!)`` over [-1, 1]."""
    K = DEGREE + 1
    M = _SERIES_TERMS
    k = np.arange(K)[:, None, None]
    m = np.arange(M)[None, :, None]
    n = np.arange(M)[None, None, :]
    p = k + m + 2 * n
    fact = np.array([math.factorial(i) for i in range(M)], dtype=float)
    table = np.where(p % 2 == 0, 2.0 / (p + 1.0), 0.0)
    return table / (fact[None, :, None] * fact[None, None, :])


def phase_moments(beta, gamma) -> np.ndarray:
    """``int_{-1}^{1} u^k exp(i (beta u + gamma u^2)) du`` for k = 0..DEGREE.

    Valid for ``|beta| + |gamma| <= pi/2`` to full double precision.
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if np.any(np.abs(beta) + np.abs(gamma) > 2.0):
        raise ValueError("phase excursion too large for the moment series")
    m = np.arange(_SERIES_TERMS)
    a = (1j * beta[:, None]) ** m[None, :]
    b = (1j * gamma[:, None]) ** m[None, :]
    table = _series_table()  # (k, m, n)
    K, M = table.shape[0], table.shape[1]
    inner = (a @ table.transpose(1, 0, 2).reshape(M, K * M)).reshape(len(beta), K, M)
    return np.einsum("pkn,pn->pk", inner, b)


def _panel_step(left: float, s: float, c: float, budget: float, cap: float) -> float:
    """Widest panel from ``left`` whose phase excursion stays under ``budget``."""
    g = abs(2.0 * s * left + c)
    a3 = 3.0 * abs(s)
    # positive root of a3 hw^2 + g hw = budget, written without cancellation
    root = g + math.sqrt(g * g + 4.0 * a3 * budget)
    hw = 2.0 * budget / root if root > 0 else math.inf
    return min(2.0 * hw, cap)


def build_panels(
    a: float,
    b: float,
    s: float,
    c: float = 0.0,
    budget: float = 0.5 * math.pi,
    max_width: float = 0.05,
    breaks=(),
    grade_to_zero: bool = False,
) -> np.ndarray:
    """Panel edges on [a, b] honouring the phase budget for ``s lam^2 + c lam``."""
    if not b > a:
        raise ValueError("empty interval")
    if not 0 < budget <= 0.5 * math.pi + 1e-12:
        raise ValueError("phase budget must lie in (0, pi/2]")
    pts = {a, b}
    pts.update(p for p in breaks if a < p < b)
    if s != 0.0:
        star = -c / (2.0 * s)
        if a < star < b:
            pts.add(star)
    if grade_to_zero and a == 0.0:
        top = min(b, max_width)
        pts.update(top * 2.0 ** -k for k in range(1, 30))
    fixed = sorted(pts)
    edges = [fixed[0]]
    for hi in fixed[1:]:
        left = edges[-1]
        while hi - left > 1e-15 * max(1.0, abs(hi)):
            step = _panel_step(left, s, c, budget, max_width)
            if left + step >= hi - 0.1 * step:
                left = hi
            else:
                left = left + step
            edges.append(left)
    return np.asarray(edges)


@dataclass(frozen=True)
class PanelGrid:
    """Panels with shared Lobatto nodes: panel p uses ``nodes[8p : 8p + 9]``."""

    edges: np.ndarray

    @property
    def panels(self) -> int:
        return len(self.edges) - 1

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def half(self) -> np.ndarray:
        return 0.5 * np.diff(self.edges)

    @property
    def nodes(self) -> np.ndarray:
        u = _lobatto(DEGREE)
        inner = self.mid[:, None] + self.half[:, None] * u[None, :-1]
        return np.append(inner.ravel(), self.edges[-1])

    def panel_values(self, values: np.ndarray) -> np.ndarray:
        """Reshape node values (..., n_nodes) to (..., panels, 9)."""
        idx = DEGREE * np.arange(self.panels)[:, None] + np.arange(DEGREE + 1)[None, :]
        return values[..., idx]


def panel_grid(*args, **kwargs) -> PanelGrid:
    return PanelGrid(build_panels(*args, **kwargs))


def filon_weights(grid: PanelGrid, s: float, c: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Complex weights (panels, 9) for degree 8 and (panels, 5) for degree 4."""
    m, hw = grid.mid, grid.half
    beta = (2.0 * s * m + c) * hw
    gamma = s * hw * hw
    mu = phase_moments(beta, gamma)
    pref = hw * np.exp(1j * (s * m * m + c * m))
    w8 = pref[:, None] * (mu @ _inverse_vandermonde(DEGREE))
    w4 = pref[:, None] * (mu[:, :5] @ _inverse_vandermonde(4))
    return w8, w4


def filon_integrate(grid: PanelGrid, values: np.ndarray, s: float, c: float = 0.0, weights=None):
    """Integral of ``values * exp(i (s lam^2 + c lam))`` over the grid.

    ``values`` has shape (..., n_nodes).  Returns ``(value, err_est)`` where the
    error estimate is the sum over panels of ``|Q8 - Q4|``.
    """
    w8, w4 = weights if weights is not None else filon_weights(grid, s, c)
    pv = grid.panel_values(np.asarray(values))
    q8 = np.einsum("...pj,pj->...p", pv, w8)
    q4 = np.einsum("...pj,pj->...p", pv[..., ::2], w4)
    return q8.sum(axis=-1), np.abs(q8 - q4).sum(axis=-1)


def fresnel_segment(s: float, c: float, a: float, b: float) -> complex:
    """Closed form of ``int_a^b exp(i (s lam^2 + c lam)) dlam`` through the complex error function.

    The erf difference cancels badly when ``|s|`` is small against ``|c|``;
    use it as a reference for moderate ``s`` only.
    """
    if s == 0.0:
        # (e^{i theta} - 1) / (i theta) = e^{i theta/2} sinc, stable down to c = 0
        half = 0.5 * c * (b - a)
        return complex((b - a) * np.exp(1j * (c * a + half)) * np.sinc(half / math.pi))
    root = np.sqrt(complex(-1j * s))
    shift = c / (2.0 * s)
    pref = np.exp(-1j * c * c / (4.0 * s)) * math.sqrt(math.pi) / (2.0 * root)
    return complex(pref * (erf(root * (b + shift)) - erf(root * (a + shift))))


def neville_zero(eps: np.ndarray, values: np.ndarray) -> tuple[complex, float]:
    """Polynomial extrapolation of ``values(eps)`` to eps = 0.

    Returns the extrapolated value and the change from the previous order,
    used as the error estimate.
    """
    eps = np.asarray(eps, dtype=float)
    p = np.asarray(values, dtype=complex).copy()
    n = len(eps)
    if n < 2:
        raise ValueError("need at least two regularised values")
    diag = [p[0]]
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (eps[i + k] * p[i] - eps[i] * p[i + 1]) / (eps[i + k] - eps[i])
        diag.append(p[0])
    return complex(diag[-1]), float(abs(diag[-1] - diag[-2]))
