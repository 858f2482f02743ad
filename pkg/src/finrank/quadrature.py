"""Composite Gauss-Legendre rules and principal-value helpers."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


class QuadratureError(RuntimeError):
    """A quadrature failed to reach its tolerance; ``diagnostics`` says why."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def panel_edges(a: float, b: float, width: float, breaks=()) -> np.ndarray:
    """Edges covering [a, b] with panels no wider than ``width``."""
    pts = [a, b] + [p for p in breaks if a < p < b]
    pts = np.unique(np.asarray(pts, dtype=float))
    edges = [pts[0]]
    for lo, hi in zip(pts[:-1], pts[1:]):
        m = max(1, int(np.ceil((hi - lo) / width - 1e-12)))
        edges.extend(np.linspace(lo, hi, m + 1)[1:])
    return np.asarray(edges)


def composite_gl(edges, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of an n-point rule on every panel of ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(n)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def gl_rule(a: float, b: float, width: float, n: int, breaks=()) -> tuple[np.ndarray, np.ndarray]:
    return composite_gl(panel_edges(a, b, width, breaks), n)


def nearest_gap(nodes: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest entry of sorted ``nodes``."""
    idx = np.searchsorted(nodes, points)
    lo = nodes[np.clip(idx - 1, 0, len(nodes) - 1)]
    hi = nodes[np.clip(idx, 0, len(nodes) - 1)]
    return np.minimum(np.abs(points - lo), np.abs(points - hi))


def staggered_rules(a: float, b: float, width: float, n: int, breaks=()):
    """Two composite rules on [a, b] whose interior edges are offset by half a panel.

    Singularity-subtracted principal values pick, per pole, whichever rule
    keeps its nodes farther from the pole.
    """
    first = gl_rule(a, b, width, n, breaks)
    edges = panel_edges(a, b, width, breaks)
    shifted = 0.5 * (edges[1:] + edges[:-1])
    second_edges = np.unique(np.concatenate([[a, b], shifted, [p for p in breaks if a < p < b]]))
    second = composite_gl(second_edges, n)
    return first, second


class CauchyRule:
    """Principal values ``PV int_a^b f(x) / (x - p) dx`` by singularity subtraction.

    ``PV = int [f(x) - f(p)] / (x - p) dx + f(p) log|(b - p) / (a - p)|``.  The
    subtracted integrand is smooth, but rounding in ``f(x) - f(p)`` grows as a
    node approaches ``p``; each pole therefore uses whichever of two staggered
    rules keeps its nodes farther away.
    """

    def __init__(self, a: float, b: float, width: float, n: int = 16, breaks=()):
        if not b > a:
            raise ValueError("empty interval")
        self.a, self.b = float(a), float(b)
        self.rules = staggered_rules(a, b, width, n, breaks)
        self.min_spacing = min(float(np.min(np.diff(r[0]))) for r in self.rules)

    @property
    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        return self.rules[0][0], self.rules[1][0]

    def choose(self, poles: np.ndarray) -> np.ndarray:
        """Index (0 or 1) of the rule used for each pole."""
        g0 = nearest_gap(self.rules[0][0], poles)
        g1 = nearest_gap(self.rules[1][0], poles)
        gap = np.maximum(g0, g1)
        inside = (poles > self.a) & (poles < self.b)
        if np.any(inside & (gap < 1e-6 * self.min_spacing)):
            raise QuadratureError(
                "principal value too close to a sampling node",
                poles=poles[inside & (gap < 1e-6 * self.min_spacing)],
            )
        return (g1 > g0).astype(int)

    def pv(self, values, f_at_poles: np.ndarray, poles: np.ndarray, chunk: int = 512) -> np.ndarray:
        """Principal values for every pole.

        ``values`` holds f at the nodes of both rules, shapes (n0, m) and
        (n1, m); ``f_at_poles`` has shape (P, m).  Returns shape (P, m).
        """
        poles = np.asarray(poles, dtype=float)
        fp = np.asarray(f_at_poles)
        which = self.choose(poles)
        out = np.zeros(fp.shape, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.log(np.abs((self.b - poles) / (self.a - poles)))
        for r in (0, 1):
            x, w = self.rules[r]
            f = np.asarray(values[r])
            idx = np.nonzero(which == r)[0]
            for start in range(0, len(idx), chunk):
                sel = idx[start:start + chunk]
                k = w[None, :] / (x[None, :] - poles[sel, None])
                out[sel] = k @ f - fp[sel] * k.sum(axis=1)[:, None]
        with np.errstate(invalid="ignore"):
            tail = np.where(fp != 0, fp * logs[:, None], 0.0)
        return out + tail
