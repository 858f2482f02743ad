"""Oscillatory integrals ``I(t, x) = int_omega exp(i (t lam^2 + x lam)) psi(lam) dlam``.

Symbols are ``lam^b`` times a smooth cut-off adapted to ``omega = (0, r0)``
(low) or ``(r0, inf)`` (high).  Values come from the Filon engine of
:mod:`finrank.propagator`; high-energy integrals are damped by
``exp(-eps lam)`` and extrapolated to eps = 0.  Bound checks compare ``|I|``
against the model right-hand sides with unit constant and look at how the
largest ratio moves when the lattice is refined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import plateau
from .propagator import QuadratureConfig, oscillatory_lambda_quadrature

__all__ = [
    "HypothesisError",
    "SymbolSpec",
    "OscillatoryResult",
    "BoundSweepReport",
    "model_symbol",
    "sharp_symbol",
    "oscillatory_integral",
    "stationary_phase_split",
    "bound_value",
    "verify_bound_sweep",
    "refine_lattice",
    "BOUND_IDS",
]

BOUND_IDS = ("regime", "low-energy", "high-energy")
_TRANSITION_PIECES = 16


class HypothesisError(ValueError):
    """Symbol parameters outside the admissible range ``-1 < b < 2K - 1``."""


def _fd_derivative(func, lam: np.ndarray, j: int) -> np.ndarray:
    """j-th central difference with a relative step."""
    if j == 0:
        return func(lam)
    h = 1e-3 * np.maximum(lam, 1e-3)
    total = np.zeros_like(lam, dtype=float)
    for k in range(j + 1):
        total += (-1) ** k * math.comb(j, k) * func(lam + (0.5 * j - k) * h)
    return total / h**j


@dataclass(frozen=True)
class SymbolSpec:
    """``psi(lam) = lam^b * cutoff(lam)`` on ``omega``.

    ``cutoff="smooth"`` uses the plateau bump (low: ``plateau(lam / r0)``,
    high: ``1 - plateau(lam / (2 r0))``), so ``psi`` vanishes smoothly at the
    finite end of ``omega``.  ``cutoff="sharp"`` is the plain indicator.
    """

    b: float
    K: int
    omega: str
    r0: float = 1.0
    cutoff: str = "smooth"
    deriv_constants: tuple = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if self.omega not in ("low", "high"):
            raise ValueError("omega must be 'low' or 'high'")
        if self.cutoff not in ("smooth", "sharp"):
            raise ValueError("cutoff must be 'smooth' or 'sharp'")
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")
        if self.K < 1 or not -1 < self.b < 2 * self.K - 1:
            raise HypothesisError(f"need -1 < b < 2K - 1, got b = {self.b}, K = {self.K}")

    @property
    def interval(self) -> tuple[float, float]:
        return (0.0, self.r0) if self.omega == "low" else (self.r0, math.inf)

    @property
    def transition(self) -> tuple[float, float] | None:
        """Where the smooth cut-off moves between 0 and 1."""
        if self.cutoff == "sharp":
            return None
        return (0.5 * self.r0, self.r0) if self.omega == "low" else (self.r0, 2.0 * self.r0)

    def cutoff_value(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.cutoff == "sharp":
            lo, hi = self.interval
            return ((lam >= lo) & (lam <= hi)).astype(float)
        if self.omega == "low":
            return plateau(lam / self.r0)
        return 1.0 - plateau(lam / (2.0 * self.r0))

    def eval(self, lam):
        """Values on real lam; complex lam (rotated tails, high only) get ``lam^b``."""
        if np.iscomplexobj(lam):
            return np.asarray(lam) ** self.b
        lam = np.asarray(lam, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            power = np.where(lam > 0, np.abs(lam) ** self.b, 0.0)
        return power * self.cutoff_value(lam)

    __call__ = eval

    def derivative(self, lam, j: int) -> np.ndarray:
        return _fd_derivative(self.eval, np.asarray(lam, dtype=float), j)

    def sample_points(self, count: int = 400) -> np.ndarray:
        lo, hi = self.interval
        hi = hi if math.isfinite(hi) else 50.0 * self.r0
        lo = max(lo, 1e-3 * self.r0)
        return np.geomspace(lo, hi, count)[1:-1]

    def measured_constants(self, count: int = 400) -> tuple:
        """``max |psi^(j)| lam^{j - b}`` over a geometric sweep, j = 0..K."""
        lam = self.sample_points(count)
        return tuple(float(np.max(np.abs(self.derivative(lam, j)) * lam ** (j - self.b))) for j in range(self.K + 1))


def model_symbol(b: float, K: int, omega: str, r0: float = 1.0) -> SymbolSpec:
    spec = SymbolSpec(b, K, omega, r0)
    return SymbolSpec(b, K, omega, r0, "smooth", spec.measured_constants())


def sharp_symbol(b: float, omega: str, r0: float, K: int = 1) -> SymbolSpec:
    """``lam^b`` times the indicator of omega (no smooth cut-off)."""
    return SymbolSpec(b, K, omega, r0, "sharp")


@dataclass(frozen=True)
class OscillatoryResult:
    t: float
    x: float
    value: complex
    regime: str
    bound: float
    ratio: float
    err_est: float


def bound_value(bound_id: str, t: float, x: float, b: float, d: int = 3) -> float:
    """Right-hand side of the model bound with unit constant."""
    at = abs(t)
    if bound_id == "regime":
        if at**-0.5 * abs(x) > 1:
            return at ** (-0.5 - b) * abs(x) ** b
        return at ** (-0.5 * (1 + b))
    if bound_id == "low-energy":
        return at ** (-0.5 * (1 + b)) * (1 + abs(x)) ** (0.5 * b)
    if bound_id == "high-energy":
        return at ** (-0.5 * d) * (1 + abs(x)) ** (0.5 * (d - 1))
    raise ValueError(f"unknown bound {bound_id!r}; expected one of {BOUND_IDS}")


def regime(t: float, x: float) -> str:
    return "near" if abs(t) ** -0.5 * abs(x) <= 1 else "far"


def _default_config(psi: SymbolSpec) -> QuadratureConfig:
    return QuadratureConfig(lambda_max=max(1.0, 2.0 * psi.r0))


def _transition_breaks(lo: float, hi: float, pieces: int = _TRANSITION_PIECES) -> list[float]:
    return list(np.linspace(lo, hi, pieces + 1))


def _integrate(func, t: float, x: float, psi: SymbolSpec, cfg, lo: float, hi: float, breaks) -> tuple[complex, float]:
    # the engine's phase is -t' lam^2 + c lam, so t' = -t and c = x
    grade = psi.omega == "low" and (psi.b < 0 or psi.b != int(psi.b))
    return oscillatory_lambda_quadrature(
        func, -t, (lo, hi), cfg, c=x, regularizer="linear", grade_to_zero=grade and lo == 0.0, breaks=tuple(breaks)
    )


def _symbol_breaks(psi: SymbolSpec) -> list[float]:
    tr = psi.transition
    return _transition_breaks(*tr) if tr else []


def oscillatory_integral(t: float, x: float, psi: SymbolSpec, cfg: QuadratureConfig | None = None,
                         bound_id: str = "regime", d: int = 3) -> OscillatoryResult:
    if t == 0:
        raise ValueError("t must be nonzero")
    cfg = cfg or _default_config(psi)
    lo, hi = psi.interval
    value, err = _integrate(psi.eval, t, x, psi, cfg, lo, hi, _symbol_breaks(psi))
    bound = bound_value(bound_id, t, x, psi.b, d)
    return OscillatoryResult(float(t), float(x), value, regime(t, x), bound, abs(value) / bound, err)


def stationary_phase_split(t: float, x: float, psi: SymbolSpec, cfg: QuadratureConfig | None = None):
    """``(I1, I2)`` with ``I1`` localised where ``|2 lam + x/t| < |x/t| / 2``.

    The cut-off is ``plateau((2 lam + x/t) / (|x/t| / 2))``; ``I2`` carries
    the complement.  Without a stationary point in ``lam > 0`` (``x/t >= 0``)
    the first piece is empty and ``I1 = 0``.
    """
    if t == 0:
        raise ValueError("t must be nonzero")
    cfg = cfg or _default_config(psi)
    lo, hi = psi.interval
    star = -x / (2.0 * t)
    if x == 0 or star <= 0:
        value, _ = _integrate(psi.eval, t, x, psi, cfg, lo, hi, _symbol_breaks(psi))
        return 0.0j, value
    scale = 0.25 * abs(x / t)  # plateau argument is (lam - star) / scale

    def phi1(lam):
        return plateau((np.asarray(lam, dtype=float) - star) / scale)

    def first(lam):
        return phi1(lam) * psi.eval(lam)

    def second(lam):
        if np.iscomplexobj(lam):
            return psi.eval(lam)
        return (1.0 - phi1(lam)) * psi.eval(lam)

    a1, b1 = max(lo, star - scale), min(hi, star + scale)
    split_breaks = (
        _transition_breaks(star - scale, star - 0.5 * scale)
        + _transition_breaks(star + 0.5 * scale, star + scale)
        + [star - 0.5 * scale, star + 0.5 * scale]
    )
    breaks = _symbol_breaks(psi) + split_breaks
    i1 = 0.0j
    if b1 > a1:
        i1, _ = _integrate(first, t, x, psi, cfg, a1, b1, [p for p in breaks if a1 < p < b1])
    i2, _ = _integrate(second, t, x, psi, cfg, lo, hi, breaks)
    return i1, i2


def refine_lattice(values) -> np.ndarray:
    """Insert midpoints (geometric when all values share a sign and are nonzero)."""
    v = np.asarray(sorted(values), dtype=float)
    if np.all(v > 0) or np.all(v < 0):
        mids = np.sign(v[0]) * np.sqrt(v[:-1] * v[1:])
    else:
        mids = 0.5 * (v[:-1] + v[1:])
    return np.sort(np.concatenate([v, mids]))


@dataclass(frozen=True)
class BoundSweepReport:
    bound_id: str
    symbol: SymbolSpec
    max_ratio: float
    max_ratio_doubled: float
    growth: float
    passed: bool
    rows: tuple  # (t, x, regime, |I|, bound, ratio) on the doubled lattice

    def csv_rows(self):
        return [list(r) for r in self.rows]


def _sweep(bound_id, psi, ts, xs, d, cfg):
    rows = []
    for t in ts:
        for x in xs:
            r = oscillatory_integral(float(t), float(x), psi, cfg, bound_id, d)
            rows.append((r.t, r.x, r.regime, abs(r.value), r.bound, r.ratio))
    return rows


def verify_bound_sweep(bound_id: str, psi: SymbolSpec, ts, xs, d: int = 3,
                       cfg: QuadratureConfig | None = None, tolerance: float = 0.1) -> BoundSweepReport:
    """Largest ``|I| / bound`` on a lattice and on its midpoint refinement.

    Passes when the refined maximum exceeds the original by at most
    ``tolerance`` (relative): an empirical sign of a uniform constant.
    """
    if bound_id not in BOUND_IDS:
        raise ValueError(f"unknown bound {bound_id!r}")
    if bound_id == "low-energy" and psi.omega != "low":
        raise HypothesisError("the low-energy bound needs omega = (0, r0)")
    if bound_id == "high-energy":
        if psi.omega != "high":
            raise HypothesisError("the high-energy bound needs omega = (r0, inf)")
        if psi.b != (d - 1) // 2 or psi.K < d // 2 + 1:
            raise HypothesisError("the high-energy bound needs psi = cutoff * lam^[(d-1)/2] with K >= [d/2] + 1")
    ts = np.asarray(sorted(ts), dtype=float)
    xs = np.asarray(sorted(xs), dtype=float)
    if np.any(ts <= 0):
        raise ValueError("times must be positive")
    fine_ts, fine_xs = refine_lattice(ts), refine_lattice(xs)
    rows = _sweep(bound_id, psi, fine_ts, fine_xs, d, cfg)
    ratios = np.array([r[5] for r in rows]).reshape(len(fine_ts), len(fine_xs))
    coarse = ratios[::2, ::2]
    m0, m1 = float(coarse.max()), float(ratios.max())
    growth = m1 / m0 - 1.0 if m0 > 0 else math.inf
    return BoundSweepReport(bound_id, psi, m0, m1, growth, growth <= tolerance, tuple(rows))
