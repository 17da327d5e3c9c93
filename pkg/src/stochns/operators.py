"""Fourier-multiplier operators: Gaussian projector, Leray projection, Bessel
potential, compact mollifier, and the truncation cutoff.

The Gaussian projector uses the lattice-aliased symbol

    psi_n^lat(xi) = sum_r exp(-|xi + r/h|^2 / n^2) / sum_r exp(-|r/h|^2 / n^2),

which by Poisson summation is the DFT of the lattice-sampled, box-periodized
kernel ``pi^(d/2) n^d exp(-pi^2 n^2 |x|^2)`` normalized to unit mass. It agrees
with ``exp(-|xi/n|^2)`` to within ``exp(-(1/(2 h n))^2)`` and, unlike the plain
sampled Gaussian, always has a positive kernel, so the projector is an exact
contraction on every L^q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TypeVar, Union

import numpy as np
import scipy.fft as sfft

from . import kernels
from .spectral import (
    Grid,
    LtwoSequenceField,
    RealVectorField,
    fft_real,
    ifft_real,
)

__all__ = [
    "gaussian_symbol",
    "gaussian_kernel",
    "gaussian_projector",
    "gaussian_projector_direct",
    "leray_project",
    "leray_hat",
    "bessel_potential",
    "mollifier_kernel",
    "mollifier_symbol",
    "mollify",
    "CutoffSpec",
    "cutoff_phi",
    "lipschitz_quadrature_constant",
    "DIRECT_MAX_POINTS",
]

Field = TypeVar("Field", RealVectorField, LtwoSequenceField)

# tail cut for image sums: exp(-6.5^2) ~ 4e-19
_IMAGE_TAIL = 6.5

DIRECT_MAX_POINTS = 32 ** 3


def _map_samples(f: Field, op) -> Field:
    return type(f)(f.grid, op(f.data))


def _apply_symbol(f: Field, symbol: np.ndarray) -> Field:
    grid = f.grid
    return _map_samples(f, lambda a: ifft_real(grid, fft_real(grid, a) * symbol))


# ---------------------------------------------------------------------------
# Gaussian projector

def _axis_gaussian_symbol(xi: np.ndarray, h: float, n: float) -> np.ndarray:
    J = int(math.ceil(_IMAGE_TAIL * n * h + 1.0))
    shifts = np.arange(-J, J + 1) / h
    total = np.exp(-(((xi[..., None] + shifts) / n) ** 2)).sum(axis=-1)
    norm = np.exp(-((shifts / n) ** 2)).sum()
    return total / norm


@lru_cache(maxsize=64)
def _gaussian_symbol_cached(grid: Grid, n: float, half: bool) -> np.ndarray:
    symbol = np.ones(grid.spectral_shape(half))
    for a, xi in enumerate(grid.wavevectors(half)):
        symbol = symbol * _axis_gaussian_symbol(xi, grid.spacing[a], n)
    symbol.setflags(write=False)
    return symbol


def gaussian_symbol(grid: Grid, n: float, half: bool = True) -> np.ndarray:
    """Lattice symbol of the projector at level ``n`` (unit value at xi = 0)."""
    if not n > 0:
        raise ValueError(f"projector level must be positive, got {n}")
    return _gaussian_symbol_cached(grid, float(n), half)


def gaussian_projector(f: Field, n: float) -> Field:
    """Apply the Gaussian low-pass projector at level ``n`` (modewise for l2 fields)."""
    return _apply_symbol(f, gaussian_symbol(f.grid, n))


def gaussian_kernel(grid: Grid, n: float) -> np.ndarray:
    """Box-periodized kernel sampled on the lattice, normalized to unit mass.

    Index ``x`` holds the kernel at the displacement ``x * h`` (wrapped).
    """
    if not n > 0:
        raise ValueError(f"projector level must be positive, got {n}")
    out = np.ones(grid.dims)
    for a in range(grid.d):
        L = grid.extent[a]
        x = grid.axis_coords(a)
        x = np.where(x >= L / 2, x - L, x)
        J = max(1, int(math.ceil(_IMAGE_TAIL / (math.pi * n * L) + 1.0)))
        images = x[:, None] - np.arange(-J, J + 1) * L
        k1 = (math.sqrt(math.pi) * n * np.exp(-(math.pi * n * images) ** 2)).sum(axis=1)
        shape = [1] * grid.d
        shape[a] = grid.dims[a]
        out = out * k1.reshape(shape)
    return out / (out.sum() * grid.volume_element)


def gaussian_projector_direct(f: Field, n: float) -> Field:
    """Direct-space circular convolution with :func:`gaussian_kernel` (O(N^2))."""
    grid = f.grid
    if grid.npoints > DIRECT_MAX_POINTS:
        raise ValueError(
            f"grid {grid.dims} too large for direct convolution (limit {DIRECT_MAX_POINTS} points)")
    kernel = gaussian_kernel(grid, n)
    dV = grid.volume_element

    def conv(a):
        flat = a.reshape((-1,) + grid.dims)
        out = np.stack([kernels.periodic_convolve(c, kernel, dV) for c in flat])
        return out.reshape(a.shape)

    return _map_samples(f, conv)


def lipschitz_quadrature_constant(d: int) -> float:
    """``int |F^{-1} psi(y)| |y| dy`` for psi = exp(-|xi|^2), by radial quadrature."""
    from scipy.integrate import quad

    sphere = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    val, _ = quad(lambda r: math.pi ** (d / 2) * math.exp(-(math.pi * r) ** 2) * r ** d,
                  0, math.inf, epsabs=1e-14, epsrel=1e-13)
    return sphere * val


# ---------------------------------------------------------------------------
# Leray projection and Bessel potential

def leray_hat(hat: np.ndarray, grid: Grid, half: bool = True) -> np.ndarray:
    """Project coefficients (component axis just before the spatial axes) onto
    the kernel of the discrete divergence.

    Built from the Nyquist-zeroed wavevectors, so it is an exact orthogonal
    projector on the lattice. Coefficients with zero wavevector (the mean) are
    left unchanged.
    """
    xi = grid.derivative_wavevectors(half)
    k2 = sum(x * x for x in xi)
    k2 = np.where(k2 == 0, 1.0, k2)
    comp = lambda a: (Ellipsis, a) + (slice(None),) * grid.d  # noqa: E731
    dot = sum(x * hat[comp(a)] for a, x in enumerate(xi)) / k2
    out = hat.copy()
    for a, x in enumerate(xi):
        out[comp(a)] -= x * dot
    return out


def leray_project(f: Field) -> Field:
    """Helmholtz-Hodge projection ``(delta_jk + R_j R_k)`` as a spectral multiplier."""
    if f.grid.d < 2:
        raise ValueError("Leray projection needs d >= 2")
    grid = f.grid
    return _map_samples(f, lambda a: ifft_real(grid, leray_hat(fft_real(grid, a), grid)))


def bessel_potential(f: Field, s: float) -> Field:
    """Apply ``J^s`` with symbol ``(1 + 4 pi^2 |xi|^2)^(s/2)``."""
    grid = f.grid
    symbol = (1.0 + 4 * math.pi ** 2 * grid.xi_squared(half=True)) ** (0.5 * s)
    return _apply_symbol(f, symbol)


# ---------------------------------------------------------------------------
# mollifier

def _bump(r2: np.ndarray) -> np.ndarray:
    inside = r2 < 0.25
    out = np.zeros_like(r2)
    out[inside] = np.exp(-1.0 / (1.0 - 4.0 * r2[inside]))
    return out


def mollifier_kernel(grid: Grid, eps: float) -> np.ndarray:
    """Lattice samples of ``rho_eps`` (support radius eps/2), unit discrete mass."""
    if not 0 < eps < min(grid.extent) / 2:
        raise ValueError(f"mollifier width must lie in (0, L/2), got {eps}")
    r2 = np.zeros(grid.dims)
    for a in range(grid.d):
        L = grid.extent[a]
        x = grid.axis_coords(a)
        x = np.where(x >= L / 2, x - L, x) / eps
        shape = [1] * grid.d
        shape[a] = grid.dims[a]
        r2 = r2 + (x ** 2).reshape(shape)
    rho = _bump(r2)
    if rho.sum() == 0.0:
        rho.flat[0] = 1.0
    return rho / (rho.sum() * grid.volume_element)


@lru_cache(maxsize=32)
def _mollifier_symbol_cached(grid: Grid, eps: float) -> np.ndarray:
    rho = mollifier_kernel(grid, eps)
    symbol = sfft.rfftn(rho) * grid.volume_element
    symbol.setflags(write=False)
    return symbol


def mollifier_symbol(grid: Grid, eps: float) -> np.ndarray:
    return _mollifier_symbol_cached(grid, float(eps))


def mollify(f: Field, eps: float) -> Field:
    """Circular convolution with the compactly supported unit-mass bump of width eps."""
    return _apply_symbol(f, mollifier_symbol(f.grid, eps))


# ---------------------------------------------------------------------------
# cutoff

@dataclass(frozen=True)
class CutoffSpec:
    """Smooth gate equal to 1 on [0, 2N] and 0 on [4N, inf).

    The bridge is ``1 - S((t - 2N) / 2N)`` with the quintic smoothstep
    ``S(s) = 6 s^5 - 15 s^4 + 10 s^3``.
    """

    N: float

    def __post_init__(self):
        if not self.N > 0:
            raise ValueError(f"cutoff level must be positive, got {self.N}")

    @property
    def lipschitz(self) -> float:
        # max S' = 15/8 at s = 1/2, divided by the bridge length 2N
        return 15.0 / (16.0 * self.N)

    def __call__(self, t):
        return cutoff_phi(t, self)


def _smoothstep(s):
    return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)


def cutoff_phi(t: Union[float, np.ndarray], spec: CutoffSpec):
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0) or not np.all(np.isfinite(t_arr)):
        raise ValueError("cutoff argument must be finite and nonnegative")
    N = spec.N
    s = np.clip((t_arr - 2 * N) / (2 * N), 0.0, 1.0)
    out = np.where(t_arr <= 2 * N, 1.0, np.where(t_arr >= 4 * N, 0.0, 1.0 - _smoothstep(s)))
    if out.ndim == 0:
        return float(out)
    return out
