"""Brute-force propagator on a periodic box.

``H`` is discretised with the spectral (Fourier) Laplacian on ``n`` equispaced
points of ``[-L, L)`` and the projections as ``h``-weighted outer products of
profile samples.  The unperturbed evolution is applied by FFT; the perturbed
one through a dense eigendecomposition.  Kernels are ``U(t) delta_y / h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .profiles import ProfileFamily

__all__ = [
    "GridSpec",
    "GridOperator",
    "BoxTooSmallError",
    "BudgetExceededError",
    "discretize_hamiltonian",
    "grid_propagator",
    "free_grid_propagator",
    "oracle_difference_kernel",
    "oracle_difference_grid",
]

MAX_DENSE_POINTS = 4096
_TAIL_TOL = 1e-10


class BoxTooSmallError(ValueError):
    """A profile is not negligible at the edge of the box."""


class BudgetExceededError(ValueError):
    """Waves reach the periodic images within the requested time."""


@dataclass(frozen=True)
class GridSpec:
    """Periodic grid ``x_m = -L + m h`` with ``h = 2L / n`` (d = 1)."""

    L: float
    n: int

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.n < 64 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two and at least 64")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        return 2.0 * math.pi * np.fft.fftfreq(self.n, self.h)

    @property
    def nyquist(self) -> float:
        return math.pi / self.h

    def index(self, x: float) -> int:
        m = (x + self.L) / self.h
        j = int(round(m))
        if abs(m - j) > 1e-9 or not 0 <= j < self.n:
            raise ValueError(f"{x} is not a grid node")
        return j

    def check_budget(self, t: float, extent: float, e_max: float) -> None:
        """``extent + 2 |t| sqrt(e_max) <= L``: the fastest retained wave stays inside the box."""
        need = extent + 2.0 * abs(t) * math.sqrt(e_max)
        if need > self.L:
            raise BudgetExceededError(f"wraparound budget {need:.4g} exceeds box half-width {self.L:.4g}")


@dataclass
class GridOperator:
    spec: GridSpec
    family: ProfileFamily
    H_mat: np.ndarray | None
    samples: np.ndarray  # (N, n)
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eig is None:
            if self.H_mat is None:
                raise ValueError("the free operator is diagonal in Fourier space; no dense matrix is kept")
            self._eig = np.linalg.eigh(self.H_mat)
        return self._eig

    @property
    def eigenvalues(self) -> np.ndarray:
        if self.H_mat is None:
            return np.sort(self.spec.k**2)
        return self.eig[0]

    @property
    def e_max(self) -> float:
        """Largest squared frequency the perturbation can excite."""
        if self.family.N == 0:
            return self.spec.nyquist**2
        return max(m.spectral_interval[1] for m in self.family.members) ** 2

    def hermiticity_defect(self) -> float:
        if self.H_mat is None:
            return 0.0
        return float(np.max(np.abs(self.H_mat - self.H_mat.conj().T)))

    def apply(self, u: np.ndarray) -> np.ndarray:
        """``H u`` on the grid."""
        out = np.fft.ifft(self.spec.k**2 * np.fft.fft(u))
        if self.family.N:
            h = self.spec.h
            for w, phi in zip(self.family.weight_vector, self.samples):
                out = out + w * h * phi * np.vdot(phi, u)
        return out


def _laplacian(spec: GridSpec) -> np.ndarray:
    eye = np.eye(spec.n)
    lap = np.fft.ifft(spec.k[:, None] ** 2 * np.fft.fft(eye, axis=0), axis=0).real
    return 0.5 * (lap + lap.T)


def discretize_hamiltonian(f: ProfileFamily, g: GridSpec) -> GridOperator:
    if f.N and f.d != 1:
        raise NotImplementedError("the grid oracle is implemented for d = 1")
    x = g.x
    samples = np.array([m.eval(x) for m in f.members], dtype=complex).reshape(f.N, g.n)
    for m, phi in zip(f.members, samples):
        edge = max(abs(phi[0]), abs(complex(m.eval(np.array([g.L]))[0])))
        if edge > _TAIL_TOL:
            raise BoxTooSmallError(f"profile {m.label or m.shape.kind} is {edge:.2e} at the box edge")
    if f.N == 0:
        return GridOperator(g, f, None, samples)
    if g.n > MAX_DENSE_POINTS:
        raise ValueError(f"dense oracle limited to n <= {MAX_DENSE_POINTS}")
    H = _laplacian(g).astype(complex)
    for w, phi in zip(f.weight_vector, samples):
        H += w * g.h * np.outer(phi, phi.conj())
    H = 0.5 * (H + H.conj().T)
    return GridOperator(g, f, H, samples)


def free_grid_propagator(spec: GridSpec, t: float, y_index: int) -> np.ndarray:
    """Column ``exp(it Delta) delta_y / h`` by FFT."""
    delta = np.zeros(spec.n, dtype=complex)
    delta[y_index] = 1.0 / spec.h
    return np.fft.ifft(np.exp(-1j * t * spec.k**2) * np.fft.fft(delta))


def grid_propagator(op: GridOperator, t: float, y_index: int, check_budget: bool = True) -> np.ndarray:
    """Column ``exp(-itH) delta_y / h``."""
    spec = op.spec
    if check_budget:
        spec.check_budget(t, abs(spec.x[y_index]), op.e_max)
    if op.H_mat is None:
        return free_grid_propagator(spec, t, y_index)
    lam, V = op.eig
    return V @ (np.exp(-1j * t * lam) * V[y_index].conj()) / spec.h


def _interp_weights(spec: GridSpec, x: float) -> list[tuple[int, float]]:
    m = (x + spec.L) / spec.h
    j = int(math.floor(m))
    frac = m - j
    if abs(frac) < 1e-9:
        return [(j % spec.n, 1.0)]
    if abs(frac - 1) < 1e-9:
        return [((j + 1) % spec.n, 1.0)]
    return [(j % spec.n, 1.0 - frac), ((j + 1) % spec.n, frac)]


def oracle_difference_grid(op: GridOperator, t: float, xs, ys) -> np.ndarray:
    """``(exp(-itH) - exp(-itH0))(x, y)`` for all pairs; off-node points bilinearly interpolated."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    spec = op.spec
    out = np.zeros((len(xs), len(ys)), dtype=complex)
    if op.family.N == 0 or not np.any(op.family.weight_vector):
        return out
    spec.check_budget(t, float(max(np.max(np.abs(xs)), np.max(np.abs(ys)))), op.e_max)
    cols = {}
    for b, y in enumerate(ys):
        for jy, wy in _interp_weights(spec, y):
            if jy not in cols:
                cols[jy] = grid_propagator(op, t, jy, check_budget=False) - free_grid_propagator(spec, t, jy)
            col = cols[jy]
            for a, x in enumerate(xs):
                for jx, wx in _interp_weights(spec, x):
                    out[a, b] += wx * wy * col[jx]
    return out


def oracle_difference_kernel(f: ProfileFamily, g: GridSpec, t: float, x: float, y: float) -> complex:
    return complex(oracle_difference_grid(discretize_hamiltonian(f, g), t, [x], [y])[0, 0])
