"""Deterministic initial-data generators."""

from __future__ import annotations

import math

import numpy as np

from .spectral import Grid, RealVectorField, ifft_real


def random_smooth_field(grid: Grid, seed: int, amplitude: float = 1.0,
                        modes: float = 3.0) -> RealVectorField:
    """Gaussian random field with spectrum ``exp(-|m|^2 / modes^2)`` (m the
    lattice index), scaled to root-mean-square ``amplitude``."""
    rng = np.random.default_rng([int(seed), 0x5EED])
    shape = (grid.d,) + grid.spectral_shape(half=True)
    hat = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    m2 = sum((x * L) ** 2 for x, L in zip(grid.xi_half, grid.extent))
    hat *= np.exp(-m2 / modes ** 2)
    u = ifft_real(grid, hat)
    rms = math.sqrt(float(np.mean(np.sum(u * u, axis=0))))
    return RealVectorField(grid, u * (amplitude / rms if rms > 0 else 0.0))


def taylor_green(grid: Grid, amplitude: float = 1.0) -> RealVectorField:
    """Divergence-free Taylor-Green cell at the box scale (2-D: the
    stream-function vortex ``(sin x cos y, -cos x sin y)``)."""
    k = [2 * math.pi / L for L in grid.extent]
    c = grid.coords
    if grid.d == 3:
        x, y, z = (kk * cc for kk, cc in zip(k, c))
        u = np.stack(np.broadcast_arrays(np.sin(x) * np.cos(y) * np.cos(z),
                                         -np.cos(x) * np.sin(y) * np.cos(z),
                                         np.zeros_like(x * y * z)))
    else:
        x, y = (kk * cc for kk, cc in zip(k, c))
        u = np.stack(np.broadcast_arrays(np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)))
    return RealVectorField(grid, amplitude * np.array(u, dtype=np.float64))


def localized_field(grid: Grid, seed: int, amplitude: float = 1.0, modes: float = 3.0,
                    width: float = 3.0) -> RealVectorField:
    """:func:`random_smooth_field` under the envelope ``exp(-|x - x_c|^2 / (2 w^2))``
    centered in the box, so the data decays like an L^p function on the whole space."""
    base = random_smooth_field(grid, seed, amplitude, modes)
    r2 = sum((x - 0.5 * L) ** 2 for x, L in zip(grid.coords, grid.extent))
    return base.with_data(base.data * np.exp(-r2 / (2 * width ** 2)))
