import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochns.spectral import (
    Grid,
    LtwoSequenceField,
    RealVectorField,
    SpectralVectorField,
    apply_multiplier,
    fft_real,
    forward_transform,
    gradient_fd,
    hs_lp_norm,
    ifft_real,
    inverse_transform,
    lp_norm,
    lp_norm_array,
    spectral_divergence,
    spectral_gradient,
)

dims_st = st.sampled_from([4, 6, 8, 10])
extent_st = st.floats(0.25, 30.0)


def test_grid_geometry():
    g = Grid([8, 16, 4], [1.0, 2.0, 0.5])
    assert g.d == 3 and g.npoints == 512
    np.testing.assert_allclose(g.spacing, [0.125, 0.125, 0.125])
    assert g.volume == pytest.approx(1.0)
    assert g.volume_element == pytest.approx(0.125 ** 3)
    assert g.spectral_shape(half=True) == (8, 16, 3)


@pytest.mark.parametrize("dims,extent", [([5, 8, 8], 1.0), ([2, 8, 8], 1.0), ([8], 1.0),
                                         ([8, 8, 8], 0.0), ([8, 8], [1.0, 2.0, 3.0])])
def test_grid_rejects_bad_input(dims, extent):
    with pytest.raises(ValueError):
        Grid(dims, extent)


def test_field_validation():
    g = Grid([4, 4, 4], 1.0)
    with pytest.raises(ValueError):
        RealVectorField(g, np.zeros((2, 4, 4, 4)))
    bad = np.zeros((3, 4, 4, 4))
    bad[0, 0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        RealVectorField(g, bad)
    with pytest.raises(ValueError):
        LtwoSequenceField(g, np.zeros((0, 3, 4, 4, 4)))


def test_single_mode_coefficients():
    # cos(2 pi m x / L) has coefficients V/2 at +-m
    g = Grid([8, 8, 8], 3.0)
    x = g.coords[0] + 0 * g.coords[1] + 0 * g.coords[2]
    f = RealVectorField(g, np.stack([np.cos(2 * math.pi * 2 * x / 3.0), 0 * x, 0 * x]))
    F = forward_transform(f).data[0]
    expected = np.zeros_like(F)
    expected[2, 0, 0] = expected[-2, 0, 0] = g.volume / 2
    np.testing.assert_allclose(F, expected, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(n=dims_st, L=extent_st, seed=st.integers(0, 2 ** 31))
def test_round_trip_and_parseval(n, L, seed):
    g = Grid([n, n + 2, n], L)
    f = RealVectorField(g, np.random.default_rng(seed).standard_normal((3,) + g.dims))
    F = forward_transform(f)
    assert F.hermitian_defect() < 1e-12 * np.max(np.abs(F.data))
    np.testing.assert_allclose(inverse_transform(F).data, f.data, atol=1e-12)
    lhs = lp_norm(f, 2) ** 2
    assert lhs == pytest.approx(np.sum(np.abs(F.data) ** 2) / g.volume, rel=1e-10)
    np.testing.assert_allclose(ifft_real(g, fft_real(g, f.data)), f.data, atol=1e-12)


def test_multiplier_composition():
    g = Grid([8, 8, 8], 2.0)
    F = forward_transform(RealVectorField(g, np.random.default_rng(1).standard_normal((3, 8, 8, 8))))
    a = lambda *xi: np.exp(-sum(x * x for x in xi))  # noqa: E731
    b = lambda *xi: 1 + xi[1] ** 2  # noqa: E731
    ab = apply_multiplier(apply_multiplier(F, a), b).data
    np.testing.assert_allclose(ab, apply_multiplier(F, lambda *xi: a(*xi) * b(*xi)).data, atol=1e-12)


def test_lp_norms_against_closed_forms():
    # lattice quadrature is exact for trigonometric polynomials of low degree
    L = 2.0
    g = Grid([16, 16, 16], L)
    x = g.coords[0] + 0 * g.coords[1] + 0 * g.coords[2]
    s = np.sin(2 * math.pi * x / L)
    f = RealVectorField(g, np.stack([s, 0 * s, 0 * s]))
    V = g.volume
    assert lp_norm(f, 2) == pytest.approx(math.sqrt(V / 2), rel=1e-13)
    assert lp_norm(f, 4) == pytest.approx((3 * V / 8) ** 0.25, rel=1e-13)
    assert lp_norm(f, 6) == pytest.approx((5 * V / 16) ** (1 / 6), rel=1e-13)
    assert lp_norm(f, math.inf) == pytest.approx(1.0)
    c = RealVectorField(g, np.stack([np.full(g.dims, 3.0), np.full(g.dims, 4.0), np.zeros(g.dims)]))
    assert lp_norm(c, 3) == pytest.approx(5 * V ** (1 / 3))
    with pytest.raises(ValueError):
        lp_norm(c, 0.5)


def test_hs_norm_is_pointwise_l2_over_modes():
    g = Grid([4, 4, 4], 1.0)
    rng = np.random.default_rng(2)
    G = LtwoSequenceField(g, rng.standard_normal((5, 3, 4, 4, 4)))
    pointwise = np.sqrt((G.data ** 2).sum(axis=(0, 1)))
    oracle = (np.sum(pointwise ** 3) * g.volume_element) ** (1 / 3)
    assert hs_lp_norm(G, 3) == pytest.approx(oracle, rel=1e-12)
    assert G.mode(2).data.shape == (3, 4, 4, 4)
    assert lp_norm_array(G.data, g, 3) == pytest.approx(oracle, rel=1e-12)


def test_spectral_gradient_of_trig_polynomial():
    L = 3.0
    g = Grid([16, 16, 16], L)
    x, y, z = g.coords
    k = 2 * math.pi / L
    f = np.sin(k * x) * np.cos(2 * k * y) + 0 * z
    grad = spectral_gradient(f, g)
    np.testing.assert_allclose(grad[0], k * np.cos(k * x) * np.cos(2 * k * y) + 0 * z, atol=1e-12)
    np.testing.assert_allclose(grad[1], -2 * k * np.sin(k * x) * np.sin(2 * k * y) + 0 * z, atol=1e-12)
    np.testing.assert_allclose(grad[2], 0, atol=1e-12)


@pytest.mark.parametrize("order", [2, 4, 6])
def test_fd_gradient_convergence_order(order):
    errs = []
    for n in (16, 32):
        g = Grid([n, 4, 4], 2 * math.pi)
        x = g.coords[0] + 0 * g.coords[1] + 0 * g.coords[2]
        errs.append(np.max(np.abs(gradient_fd(np.sin(x), g, 0, order) - np.cos(x))))
    rate = math.log2(errs[0] / errs[1])
    assert rate == pytest.approx(order, abs=0.3)


def test_divergence_of_gradient_field_is_detected():
    g = Grid([8, 8, 8], 1.0)
    x = g.coords[0] + 0 * g.coords[1] + 0 * g.coords[2]
    f = RealVectorField(g, np.stack([np.sin(2 * math.pi * x), 0 * x, 0 * x]))
    assert spectral_divergence(f) > 0.1 * lp_norm(f, 2)
    rot = RealVectorField(g, np.stack([0 * x, np.sin(2 * math.pi * x), 0 * x]))
    assert spectral_divergence(rot) < 1e-14


def test_two_dimensional_grid():
    g = Grid([8, 8], 1.0)
    f = RealVectorField(g, np.random.default_rng(3).standard_normal((2, 8, 8)))
    np.testing.assert_allclose(inverse_transform(forward_transform(f)).data, f.data, atol=1e-12)


def test_spectral_field_checks_shape():
    g = Grid([4, 4, 4], 1.0)
    with pytest.raises(ValueError):
        SpectralVectorField(g, np.zeros((3, 4, 4, 3)))
