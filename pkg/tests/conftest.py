import math

import numpy as np
import pytest

from stochns.spectral import Grid, RealVectorField, fft_real, ifft_real

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, name, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d} {name}: {detail}")


@pytest.fixture
def small_grid():
    return Grid([8, 8, 8], 1.0)


@pytest.fixture
def grid16():
    return Grid([16, 16, 16], 1.0)


def band_limited_divfree(grid: Grid, seed: int, mmax: int) -> RealVectorField:
    """Random divergence-free field with |m_a| <= mmax on every axis."""
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((grid.d,) + grid.dims)
    hat = fft_real(grid, data)
    keep = np.ones(grid.spectral_shape(True), dtype=bool)
    for a in range(grid.d):
        m = np.abs(grid.wavevectors(True)[a] * grid.extent[a])
        keep &= m <= mmax + 1e-9
    xi = grid.wavevectors(True)
    k2 = sum(x * x for x in xi)
    k2 = np.where(k2 == 0, 1.0, k2)
    dot = sum(x * h for x, h in zip(xi, hat))
    hat = np.stack([h - x * dot / k2 for x, h in zip(xi, hat)]) * keep
    return RealVectorField(grid, ifft_real(grid, hat))


def low_mode_field(grid: Grid) -> RealVectorField:
    """Trigonometric field built from the first lattice harmonic."""
    x, y, z = grid.coords
    k = 2 * math.pi / grid.extent[0]
    return RealVectorField(grid, np.stack([
        np.sin(k * x) * np.cos(k * y) + 0.3 * np.cos(k * z) + 0.2,
        np.cos(k * y + 0.4) * np.sin(k * z) + 0.5 * np.sin(k * x),
        np.sin(k * (x + y + z)) + 0.1,
    ]))
