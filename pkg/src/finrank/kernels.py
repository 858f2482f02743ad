"""Free resolvent kernels, their low-energy expansions and the free propagator.

Conventions: ``R0(lambda^2 +/- i0)`` is the boundary value of ``(-Delta - z)^{-1}``
with kernel depending on ``r = |x - y|``.  The plus branch is outgoing,
``exp(+i lambda r)``.  The free propagator is the kernel of ``exp(i t Delta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .special import (
    EULER_GAMMA,
    bessel_j,
    branch_sign,
    hankel_h0,
    j0_y0,
)

__all__ = [
    "DomainError",
    "SpectralPoint",
    "SplitWeights",
    "LowEnergyExpansion",
    "free_resolvent_kernel",
    "resolvent_kernel",
    "outgoing_kernel",
    "resolvent_difference_kernel",
    "low_energy_expansion",
    "remainder_constant",
    "free_propagator_kernel",
    "d2_kernel_split",
    "smooth_step",
    "plateau",
    "bessel_j",
    "hankel_h0",
]


class DomainError(ValueError):
    """Raised when a kernel is requested outside its domain."""


def _check_dimension(d: int) -> None:
    if d in (1, 2, 3) or (d >= 5 and d % 2 == 1):
        return
    raise DomainError(f"dimension {d} is not supported (use 1, 2, 3 or odd >= 5)")


@dataclass(frozen=True)
class SpectralPoint:
    d: int
    branch: str
    lam: float
    r: float

    def __post_init__(self) -> None:
        _check_dimension(self.d)
        branch_sign(self.branch)
        if not self.lam > 0:
            raise DomainError(f"lambda must be positive, got {self.lam}")
        if not self.r >= 0:
            raise DomainError(f"r must be non-negative, got {self.r}")

    @property
    def sign(self) -> int:
        return branch_sign(self.branch)


@dataclass(frozen=True)
class SplitWeights:
    """Pieces of the d = 2 plus-branch kernel and of the branch difference.

    ``kernel = exp(i z) * w_greater + w_less`` and
    ``difference = 2i * Im(exp(i z) * (j_greater + j_less))``.
    The minus-branch pieces are ``-conj`` of the stored plus-branch pieces.
    """

    w_greater: complex
    w_less: complex
    j_greater: complex
    j_less: complex
    z: float

    def kernel(self) -> complex:
        return complex(np.exp(1j * self.z) * self.w_greater + self.w_less)

    def difference(self) -> complex:
        plus = np.exp(1j * self.z) * (self.j_greater + self.j_less)
        return complex(plus - np.conj(plus))


@dataclass(frozen=True)
class LowEnergyExpansion:
    value: complex
    remainder_bound: float


# ---------------------------------------------------------------------------
# smooth cut-offs


def smooth_step(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1, built from exp(-1/s)."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
        out = a / (a + b)
    out = np.where(s <= 0, 0.0, np.where(s >= 1, 1.0, out))
    return out if out.ndim else float(out)


def plateau(z):
    """Smooth bump equal to 1 on |z| <= 1/2 and 0 on |z| >= 1."""
    z = np.asarray(z, dtype=float)
    return smooth_step(2.0 - 2.0 * np.abs(z))


# ---------------------------------------------------------------------------
# resolvent kernels


def _odd_coefficients(d: int) -> list[float]:
    m = (d - 3) // 2
    return [
        math.factorial(d - 3 - k) / (math.factorial(k) * math.factorial(m - k))
        for k in range(m + 1)
    ]


def outgoing_kernel(d: int, k, r):
    """Kernel of ``(-Delta - k^2)^{-1}`` for complex ``k`` with ``Im k >= 0``.

    Real positive ``k`` gives the plus boundary value; ``k -> -k`` gives the
    minus one for d = 1 and odd d.  d = 2 is handled by :func:`resolvent_kernel`.
    """
    _check_dimension(d)
    k = np.asarray(k, dtype=complex)
    r = np.asarray(r, dtype=float)
    if d == 1:
        return 0.5j / k * np.exp(1j * k * r)
    if d == 2:
        raise DomainError("outgoing_kernel does not cover d = 2")
    cd = (4.0 * math.pi) ** (-(d - 1) / 2.0)
    total = np.zeros(np.broadcast(k, r).shape, dtype=complex)
    for j, c in enumerate(_odd_coefficients(d)):
        total = total + c * (-2j * k * r) ** j
    with np.errstate(divide="ignore", invalid="ignore"):
        return cd * np.exp(1j * k * r) / r ** (d - 2) * total


def resolvent_kernel(d: int, lam, r, sign: int = 1):
    """Vectorised boundary-value kernel; ``sign`` selects the branch."""
    _check_dimension(d)
    lam = np.asarray(lam, dtype=float)
    r = np.asarray(r, dtype=float)
    if d == 2:
        h = hankel_h0(sign, lam * r)
        return sign * 0.25j * h
    return outgoing_kernel(d, sign * lam, r)


def free_resolvent_kernel(p: SpectralPoint) -> complex:
    if p.d >= 2 and p.r == 0:
        raise DomainError("kernel is singular at r = 0 for d >= 2")
    return complex(resolvent_kernel(p.d, p.lam, p.r, p.sign))


def resolvent_difference_kernel(d: int, lam: float, r: float) -> complex:
    """Plus-branch kernel minus minus-branch kernel.

    Finite at r = 0 in every dimension; the value there is the r -> 0 limit.
    """
    _check_dimension(d)
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if not r >= 0:
        raise DomainError(f"r must be non-negative, got {r}")
    z = lam * r
    if d == 1:
        return complex(1j / lam * math.cos(z))
    if d == 2:
        j0, _ = j0_y0(z)
        return complex(0.5j * float(j0))
    # odd d: (i/2) (lam / (2 pi r))^{d/2-1} J_{d/2-1}(lam r)
    nu = d / 2.0 - 1.0
    if z < 1e-6:
        # leading term of the small-argument expansion
        lead = (lam / (2.0 * math.pi)) ** nu * (lam / 2.0) ** nu / math.gamma(nu + 1.0)
        corr = 1.0 - z * z / (4.0 * (nu + 1.0))
        return complex(0.5j * lead * corr)
    return complex(0.5j * (lam / (2.0 * math.pi * r)) ** nu * bessel_j(nu, z))


# ---------------------------------------------------------------------------
# low-energy expansions


def _expansion_value(d: int, lam: float, r: float, sign: int) -> complex:
    if d == 1:
        return sign * 0.5j / lam - 0.5 * r
    if d == 2:
        return sign * 0.25j - EULER_GAMMA / (2 * math.pi) - math.log(0.5 * lam * r) / (2 * math.pi)
    cd = (4.0 * math.pi) ** (-(d - 1) / 2.0)
    m = (d - 3) // 2
    total = 0.0j
    for l in range(d - 1):
        dl = 0.0
        for k in range(min(l, m) + 1):
            dl += (
                math.factorial(d - 3 - k)
                / (math.factorial(k) * math.factorial(m - k))
                * (-2.0) ** k
                / math.factorial(l - k)
            )
        total += dl * (sign * 1j * lam) ** l * r ** (l + 2 - d)
    return cd * total


def _remainder_majorant(d: int, lam: float, r: float) -> float:
    if d == 1:
        return lam**0.5 * r**1.5
    if d == 2:
        return lam**1.5 * r**1.5
    return lam ** (d - 1) * r


@lru_cache(maxsize=None)
def remainder_constant(d: int) -> float:
    """Remainder constant for the k = 0 low-energy bound, calibrated once.

    The ratio |kernel - expansion| / majorant depends on ``s = lam * r`` only,
    so its maximum over a dense sweep in ``s`` (at lam = 1/2) is a majorant
    for every admissible (lam, r).  A 5% safety margin is added.
    """
    _check_dimension(d)
    lam = 0.5
    best = 0.0
    for s in np.geomspace(1e-4, 1e3, 2801):
        r = s / lam
        for sign in (1, -1):
            full = complex(resolvent_kernel(d, lam, r, sign))
            diff = abs(full - _expansion_value(d, lam, r, sign))
            best = max(best, diff / _remainder_majorant(d, lam, r))
    return 1.05 * best


def low_energy_expansion(p: SpectralPoint) -> LowEnergyExpansion:
    if not 0 < p.lam < 1:
        raise DomainError("low-energy expansion needs 0 < lambda < 1")
    if p.d >= 2 and p.r == 0:
        raise DomainError("expansion is singular at r = 0 for d >= 2")
    value = _expansion_value(p.d, p.lam, p.r, p.sign)
    bound = remainder_constant(p.d) * _remainder_majorant(p.d, p.lam, p.r)
    return LowEnergyExpansion(complex(value), float(bound))


# ---------------------------------------------------------------------------
# free propagator


def free_propagator_kernel(d: int, t: float, r):
    """Kernel of ``exp(i t Delta)``: ``(4 pi i t)^{-d/2} exp(i r^2 / 4t)``.

    Principal branch, so the prefactor is ``(4 pi t)^{-d/2} exp(-i pi d / 4)``.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be non-negative")
    pref = (4.0 * math.pi * t) ** (-d / 2.0) * np.exp(-0.25j * math.pi * d)
    out = pref * np.exp(1j * r * r / (4.0 * t))
    return complex(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# d = 2 split


def d2_kernel_split(lam: float, r: float) -> SplitWeights:
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if not r > 0:
        raise DomainError("the d = 2 split needs r > 0")
    z = lam * r
    j0, y0 = j0_y0(z)
    j0, y0 = float(j0), float(y0)
    h_plus = complex(j0, y0)
    w = float(plateau(z))
    phase = complex(np.exp(-1j * z))
    near = 0.25j * h_plus
    w_less = near * w if w > 0 else 0.0j
    w_greater = phase * near * (1.0 - w) if w < 1 else 0.0j
    j_less = 0.25j * phase * j0 * w if w > 0 else 0.0j
    j_greater = phase * near * (1.0 - w) if w < 1 else 0.0j
    return SplitWeights(
        w_greater=complex(w_greater),
        w_less=complex(w_less),
        j_greater=complex(j_greater),
        j_less=complex(j_less),
        z=z,
    )
