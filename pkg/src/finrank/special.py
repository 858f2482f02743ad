"""Bessel and Hankel functions used by the resolvent kernels.

Order-zero functions use three regimes:

* ``z < SERIES_CROSSOVER`` (8): ascending power series.
* ``SERIES_CROSSOVER <= z < ASYMPTOTIC_CROSSOVER`` (25): Miller backward
  recurrence normalised by ``J0 + 2 sum J_2k = 1``, with ``Y0`` from the
  Neumann series.  The Hankel expansion at z = 8 stalls near 1e-7, so it is
  only trusted further out.
* ``z >= ASYMPTOTIC_CROSSOVER``: Hankel asymptotic expansion, truncated at
  the smallest term (about 1e-22 at the crossover).

Half-integer orders are exact finite expressions in sin, cos and powers of z.
"""

from __future__ import annotations

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061
SERIES_CROSSOVER = 8.0
ASYMPTOTIC_CROSSOVER = 25.0

_SERIES_TERMS = 48
_ASYMPTOTIC_TERMS = 40


def _series_j0_y0(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q = 0.25 * z * z
    term = np.ones_like(z)
    j0 = np.ones_like(z)
    tail = np.zeros_like(z)  # sum_{k>=1} (-1)^{k+1} H_k q^k / (k!)^2
    harmonic = 0.0
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * k)
        harmonic += 1.0 / k
        sign = -1.0 if k % 2 else 1.0
        j0 = j0 + sign * term
        tail = tail - sign * harmonic * term
        if np.all(term < 1e-18 * np.maximum(np.abs(j0), 1e-300)) and k > 4:
            break
    with np.errstate(divide="ignore"):
        log_part = np.log(0.5 * z) + EULER_GAMMA
    y0 = (2.0 / math.pi) * (log_part * j0 + tail)
    return j0, y0


def _miller_j0_y0(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    zmax = float(np.max(z))
    start = int(zmax + 30.0 + 4.0 * math.sqrt(zmax))
    start += start % 2
    jp1 = np.zeros_like(z)
    jn = np.full_like(z, 1e-30)
    norm = np.zeros_like(z)
    neumann = np.zeros_like(z)  # sum_{k>=1} (-1)^k J_2k / k, unnormalised
    for n in range(start, 0, -1):
        jm1 = (2.0 * n / z) * jn - jp1
        jp1, jn = jn, jm1
        order = n - 1
        if order > 0 and order % 2 == 0:
            norm = norm + 2.0 * jn
            k = order // 2
            neumann = neumann + (-1.0) ** k * jn / k
        big = np.abs(jn) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            jn, jp1 = jn * scale, jp1 * scale
            norm, neumann = norm * scale, neumann * scale
    norm = norm + jn
    j0 = jn / norm
    neumann = neumann / norm
    y0 = (2.0 / math.pi) * ((np.log(0.5 * z) + EULER_GAMMA) * j0 - 2.0 * neumann)
    return j0, y0


def _asymptotic_h0_plus(z: np.ndarray) -> np.ndarray:
    acc = np.ones_like(z, dtype=complex)
    term = np.ones_like(z, dtype=complex)
    inv8z = 1.0 / (8.0 * z)
    for k in range(1, _ASYMPTOTIC_TERMS):
        # a_k(0) recursion: (4*0 - (2k-1)^2) / (8k), times i/z per step
        term = term * (1j * -((2 * k - 1) ** 2) / k) * inv8z
        acc = acc + term
        if np.all(np.abs(term) < 1e-18):
            break
    return np.sqrt(2.0 / (math.pi * z)) * np.exp(1j * (z - 0.25 * math.pi)) * acc


def j0_y0(z) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(J0(z), Y0(z))`` for real ``z >= 0`` (vectorised)."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("j0_y0 requires z >= 0")
    shape = z.shape
    flat = z.ravel()
    j0 = np.empty_like(flat)
    y0 = np.empty_like(flat)
    low = flat < SERIES_CROSSOVER
    mid = (~low) & (flat < ASYMPTOTIC_CROSSOVER)
    high = flat >= ASYMPTOTIC_CROSSOVER
    if np.any(low):
        j0[low], y0[low] = _series_j0_y0(flat[low])
    if np.any(mid):
        j0[mid], y0[mid] = _miller_j0_y0(flat[mid])
    if np.any(high):
        h = _asymptotic_h0_plus(flat[high])
        j0[high], y0[high] = h.real, h.imag
    return j0.reshape(shape), y0.reshape(shape)


def bessel_j0(z) -> np.ndarray:
    return j0_y0(z)[0]


def bessel_y0(z) -> np.ndarray:
    return j0_y0(z)[1]


def hankel_h0(branch: int | str, z):
    """Order-zero Hankel function ``J0(z) + s*i*Y0(z)`` with ``s`` the branch sign.

    ``branch`` is ``"plus"``/``+1`` for the first kind and ``"minus"``/``-1``
    for the second kind.  At ``z = 0`` the imaginary part is infinite.
    """
    sign = branch_sign(branch)
    j0, y0 = j0_y0(z)
    out = j0 + sign * 1j * y0
    if np.ndim(out) == 0:
        return complex(out)
    return out


def branch_sign(branch: int | str) -> int:
    if branch in ("plus", "+", 1, +1):
        return 1
    if branch in ("minus", "-", -1):
        return -1
    raise ValueError(f"unknown branch {branch!r}")


def _spherical_hankel_sum(n: int, z: np.ndarray) -> np.ndarray:
    """First-kind spherical Hankel function h_n(z) from its finite expansion."""
    acc = np.zeros_like(z, dtype=complex)
    for k in range(n + 1):
        coeff = math.factorial(n + k) / (math.factorial(k) * math.factorial(n - k))
        acc = acc + coeff * (1j**k) / (2.0 * z) ** k
    return ((-1j) ** (n + 1)) * np.exp(1j * z) / z * acc


def _spherical_j_series(n: int, z: np.ndarray) -> np.ndarray:
    x = -0.5 * z * z
    double_fact = float(np.prod(np.arange(2 * n + 1, 0, -2))) if n > 0 else 1.0
    term = np.full_like(z, 1.0 / double_fact)
    acc = term.copy()
    for k in range(1, 80):
        term = term * x / (k * (2 * n + 2 * k + 1))
        acc = acc + term
        if np.all(np.abs(term) <= 1e-18 * np.abs(acc)):
            break
    return z**n * acc


def spherical_jn(n: int, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < max(2.0, n + 1.0)
    if np.any(small):
        out[small] = _spherical_j_series(n, z[small])
    if np.any(~small):
        out[~small] = _spherical_hankel_sum(n, z[~small]).real
    return out


def spherical_yn(n: int, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return _spherical_hankel_sum(n, z).imag


def bessel_j(nu: float, z):
    """Bessel function of the first kind for half-integer order ``nu``.

    Uses ``J_{n+1/2}(z) = sqrt(2z/pi) j_n(z)`` and, for negative orders,
    ``J_{-n-1/2}(z) = (-1)^{n+1} sqrt(2z/pi) y_n(z)``.
    """
    twice = 2.0 * nu
    if abs(twice - round(twice)) > 1e-12 or round(twice) % 2 == 0:
        raise ValueError(f"bessel_j supports half-integer orders only, got {nu}")
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0):
        raise ValueError("bessel_j requires z >= 0")
    n = int(round(nu - 0.5))
    pref = np.sqrt(2.0 * z_arr / math.pi)
    if n >= 0:
        out = pref * spherical_jn(n, z_arr)
    else:
        m = -n - 1
        with np.errstate(invalid="ignore"):
            out = (-1.0) ** (m + 1) * pref * spherical_yn(m, z_arr)
    if out.ndim == 0:
        return float(out)
    return out
