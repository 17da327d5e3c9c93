"""Periodic grid, transforms, multipliers and the norms used by the estimates.

Transform convention: ``F(f)(xi) = int exp(-2 pi i xi.x) f(x) dx`` on the box
``[0, L)^d``, discretized by the rectangle rule. Lattice index ``m`` maps to
frequency ``xi = m / L``, so the discrete pair is

    f_hat = dV * fftn(f),        f = ifftn(f_hat) / dV.

Parseval then reads ``||f||_2^2 = (1/V) sum |f_hat|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np
import scipy.fft as sfft

from . import kernels

__all__ = [
    "Grid",
    "RealVectorField",
    "SpectralVectorField",
    "LtwoSequenceField",
    "forward_transform",
    "inverse_transform",
    "apply_multiplier",
    "lp_norm",
    "lp_norm_array",
    "hs_lp_norm",
    "gradient_fd",
    "spectral_gradient",
    "gradient_lp_norm",
    "spectral_divergence",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on ``[0, L_1) x ... x [0, L_d)``."""

    dims: tuple[int, ...]
    extent: tuple[float, ...]

    def __init__(self, dims: Sequence[int], extent: Union[float, Sequence[float]] = 8 * np.pi):
        dims = tuple(int(n) for n in dims)
        if np.ndim(extent) == 0:
            extent = (float(extent),) * len(dims)
        extent = tuple(float(x) for x in extent)
        if len(dims) not in (2, 3):
            raise ValueError(f"grid dimension must be 2 or 3, got {len(dims)}")
        if len(extent) != len(dims):
            raise ValueError("extent and dims have different lengths")
        for n in dims:
            if n < 4 or n % 2:
                raise ValueError(f"lattice sizes must be even and >= 4, got {dims}")
        for x in extent:
            if not x > 0:
                raise ValueError(f"box lengths must be positive, got {extent}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "extent", extent)

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.dims

    @cached_property
    def spacing(self) -> np.ndarray:
        return np.array([L / n for L, n in zip(self.extent, self.dims)])

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    @property
    def volume_element(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def npoints(self) -> int:
        return int(np.prod(self.dims))

    def axis_coords(self, axis: int) -> np.ndarray:
        return np.arange(self.dims[axis]) * self.spacing[axis]

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Sparse (broadcastable) sample coordinates, one array per axis."""
        return tuple(np.meshgrid(*[self.axis_coords(a) for a in range(self.d)],
                                 indexing="ij", sparse=True))

    def axis_frequencies(self, axis: int, half: bool = False) -> np.ndarray:
        n, h = self.dims[axis], self.spacing[axis]
        if half and axis == self.d - 1:
            return sfft.rfftfreq(n, d=h)
        return sfft.fftfreq(n, d=h)

    def _wavevectors(self, half: bool) -> tuple[np.ndarray, ...]:
        out = []
        for a in range(self.d):
            shape = [1] * self.d
            xi = self.axis_frequencies(a, half)
            shape[a] = xi.size
            out.append(xi.reshape(shape))
        return tuple(out)

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        """Frequencies m/L on the full spectrum, one broadcastable array per axis."""
        return self._wavevectors(False)

    @cached_property
    def xi_half(self) -> tuple[np.ndarray, ...]:
        """Frequencies on the real-to-complex half spectrum (last axis halved)."""
        return self._wavevectors(True)

    def wavevectors(self, half: bool = False) -> tuple[np.ndarray, ...]:
        return self.xi_half if half else self.xi

    @cached_property
    def _dxi_full(self) -> tuple[np.ndarray, ...]:
        return tuple(x * self.nyquist_mask(a) for a, x in enumerate(self.xi))

    @cached_property
    def _dxi_half(self) -> tuple[np.ndarray, ...]:
        return tuple(x * self.nyquist_mask(a, half=True) for a, x in enumerate(self.xi_half))

    def derivative_wavevectors(self, half: bool = False) -> tuple[np.ndarray, ...]:
        """Frequencies with the Nyquist entry of each axis set to zero.

        Odd symbols (derivatives, the cross terms of the Leray projector) are
        built from these so that real fields stay real.
        """
        return self._dxi_half if half else self._dxi_full

    def xi_squared(self, half: bool = False) -> np.ndarray:
        return sum(x * x for x in self.wavevectors(half))

    def nyquist_mask(self, axis: int, half: bool = False) -> np.ndarray:
        """True except on the Nyquist plane of ``axis`` (odd symbols vanish there)."""
        xi = self.axis_frequencies(axis, half)
        keep = np.ones(xi.size, dtype=bool)
        keep[self.dims[axis] // 2] = False
        shape = [1] * self.d
        shape[axis] = xi.size
        return keep.reshape(shape)

    def spectral_shape(self, half: bool = False) -> tuple[int, ...]:
        if half:
            return self.dims[:-1] + (self.dims[-1] // 2 + 1,)
        return self.dims

    def to_dict(self) -> dict:
        return {"dims": list(self.dims), "extent": list(self.extent)}


def _check_samples(grid: Grid, data: np.ndarray, lead: int) -> None:
    if data.shape[lead:] != grid.dims:
        raise ValueError(f"array shape {data.shape} does not match grid {grid.dims}")


@dataclass(frozen=True)
class RealVectorField:
    """d real components sampled on ``grid``; ``data`` has shape ``(d, *dims)``."""

    grid: Grid
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != self.grid.d + 1 or data.shape[0] != self.grid.d:
            raise ValueError(
                f"expected {self.grid.d} components on {self.grid.dims}, got shape {data.shape}")
        _check_samples(self.grid, data, 1)
        if not np.all(np.isfinite(data)):
            raise ValueError("field has non-finite samples")
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, grid: Grid) -> "RealVectorField":
        return cls(grid, np.zeros((grid.d,) + grid.dims))

    def with_data(self, data: np.ndarray) -> "RealVectorField":
        return RealVectorField(self.grid, data)

    def __add__(self, other: "RealVectorField") -> "RealVectorField":
        return self.with_data(self.data + other.data)

    def __sub__(self, other: "RealVectorField") -> "RealVectorField":
        return self.with_data(self.data - other.data)

    def __mul__(self, c: float) -> "RealVectorField":
        return self.with_data(self.data * c)

    __rmul__ = __mul__

    def mean(self) -> np.ndarray:
        return self.data.reshape(self.grid.d, -1).mean(axis=1)


@dataclass(frozen=True)
class SpectralVectorField:
    """Full-spectrum Fourier coefficients, shape ``(d, *dims)``, complex."""

    grid: Grid
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        _check_samples(self.grid, data, data.ndim - self.grid.d)
        object.__setattr__(self, "data", data)

    def hermitian_defect(self) -> float:
        """max |F(xi) - conj(F(-xi))|; zero for coefficients of a real field."""
        axes = tuple(range(1, self.data.ndim))
        flipped = np.roll(np.flip(self.data, axis=axes), 1, axis=axes)
        return float(np.max(np.abs(self.data - np.conj(flipped))))


@dataclass(frozen=True)
class LtwoSequenceField:
    """K vector fields G e_k on a shared grid; ``data`` has shape ``(K, d, *dims)``."""

    grid: Grid
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != self.grid.d + 2:
            raise ValueError(f"expected shape (K, d, *dims), got {data.shape}")
        if data.shape[0] < 1:
            raise ValueError("an l2-valued field needs at least one mode")
        _check_samples(self.grid, data, 2)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_modes(cls, modes: Sequence[RealVectorField]) -> "LtwoSequenceField":
        if not modes:
            raise ValueError("an l2-valued field needs at least one mode")
        grid = modes[0].grid
        if any(m.grid != grid for m in modes):
            raise ValueError("all modes must share one grid")
        return cls(grid, np.stack([m.data for m in modes]))

    @property
    def K(self) -> int:
        return self.data.shape[0]

    def mode(self, k: int) -> RealVectorField:
        return RealVectorField(self.grid, self.data[k])


# ---------------------------------------------------------------------------
# transforms

def _spatial_axes(grid: Grid, arr: np.ndarray) -> tuple[int, ...]:
    return tuple(range(arr.ndim - grid.d, arr.ndim))


def fft_real(grid: Grid, arr: np.ndarray) -> np.ndarray:
    """Half-spectrum transform of real samples (trailing axes are spatial)."""
    return sfft.rfftn(arr, axes=_spatial_axes(grid, arr)) * grid.volume_element


def ifft_real(grid: Grid, hat: np.ndarray) -> np.ndarray:
    return sfft.irfftn(hat, s=grid.dims, axes=_spatial_axes(grid, hat)) / grid.volume_element


def forward_transform(f: RealVectorField) -> SpectralVectorField:
    grid = f.grid
    if f.data.shape[1:] != grid.dims:
        raise ValueError("dimension mismatch between samples and grid")
    hat = sfft.fftn(f.data, axes=_spatial_axes(grid, f.data)) * grid.volume_element
    return SpectralVectorField(grid, hat)


def inverse_transform(F: SpectralVectorField) -> RealVectorField:
    grid = F.grid
    out = sfft.ifftn(F.data, axes=_spatial_axes(grid, F.data)) / grid.volume_element
    return RealVectorField(grid, out.real)


Multiplier = Union[Callable[..., np.ndarray], np.ndarray, complex, float]


def evaluate_multiplier(grid: Grid, m: Multiplier, half: bool = False) -> np.ndarray:
    """Sample a frequency -> complex map on the lattice.

    ``m`` is either an array already on the lattice or a callable receiving the
    per-axis frequency arrays ``xi_1, ..., xi_d`` (broadcastable).
    """
    if callable(m):
        values = np.asarray(m(*grid.wavevectors(half)))
    else:
        values = np.asarray(m)
    values = np.broadcast_to(values, grid.spectral_shape(half))
    if not np.all(np.isfinite(values)):
        raise ValueError("multiplier has non-finite values on the lattice")
    return values


def apply_multiplier(F: SpectralVectorField, m: Multiplier) -> SpectralVectorField:
    """Multiply every component by ``m(xi)``."""
    values = evaluate_multiplier(F.grid, m)
    return SpectralVectorField(F.grid, F.data * values)


# ---------------------------------------------------------------------------
# norms

def lp_norm_array(data: np.ndarray, grid: Grid, p: float) -> float:
    """L^p norm of samples with leading component axes (Euclidean length pointwise)."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    data = np.asarray(data, dtype=np.float64)
    _check_samples(grid, data, data.ndim - grid.d)
    flat = data.reshape((-1,) + grid.dims) if data.ndim > grid.d else data[None]
    if np.isinf(p):
        return float(np.sqrt(np.einsum("c...,c...->...", flat, flat)).max())
    total = kernels.power_sum(flat, p) * grid.volume_element
    return float(total ** (1.0 / p))


def lp_norm(f: RealVectorField, p: float) -> float:
    """``(sum_x |f(x)|^p dV)^(1/p)`` with |.| the Euclidean length of the d-vector."""
    return lp_norm_array(f.data, f.grid, p)


def hs_lp_norm(G: LtwoSequenceField, p: float) -> float:
    """Pointwise l2 norm over modes (and components), then L^p over the box."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return lp_norm_array(G.data, G.grid, p)


# ---------------------------------------------------------------------------
# derivatives

def gradient_fd(f: np.ndarray, grid: Grid, axis: int, order: int = 2) -> np.ndarray:
    """Centered periodic finite difference of a scalar sample array."""
    coef = kernels.FD_COEFFICIENTS[order]
    out = np.zeros_like(f, dtype=np.float64)
    for s, c in enumerate(coef, start=1):
        out += c * (np.roll(f, -s, axis=axis) - np.roll(f, s, axis=axis))
    return out / grid.spacing[axis]


def spectral_gradient(arr: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral gradient of samples; output gains a new axis of length d
    in front of the spatial axes. Nyquist planes are zeroed."""
    hat = fft_real(grid, arr)
    lead = arr.shape[: arr.ndim - grid.d]
    out = np.empty(lead + (grid.d,) + grid.dims)
    for a, xi in enumerate(grid.derivative_wavevectors(half=True)):
        sym = 2j * np.pi * xi
        out[(Ellipsis, a) + (slice(None),) * grid.d] = ifft_real(grid, hat * sym)
    return out


def gradient_lp_norm(f: Union[RealVectorField, LtwoSequenceField], q: float) -> float:
    """``|| grad f ||_q`` with the pointwise Frobenius norm over all indices."""
    return lp_norm_array(spectral_gradient(f.data, f.grid), f.grid, q)


def spectral_divergence(f: RealVectorField) -> float:
    """max over xi != 0 of |xi . f_hat(xi)| / (|xi| sqrt(V)).

    Uses the derivative wavevectors (Nyquist entries zeroed), i.e. the symbol
    of the discrete divergence. Scaled so it is directly comparable with
    ``||f||_2`` (Parseval bounds each normalized coefficient by the L^2 norm).
    """
    grid = f.grid
    hat = fft_real(grid, f.data)
    xi = grid.derivative_wavevectors(half=True)
    dot = sum(x * hat[a] for a, x in enumerate(xi))
    mag = np.sqrt(sum(x * x for x in xi))
    mag[mag == 0] = 1.0
    return float(np.max(np.abs(dot) / mag) / np.sqrt(grid.volume))
