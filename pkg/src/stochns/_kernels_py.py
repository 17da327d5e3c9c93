"""NumPy implementations of the compiled kernels (same signatures)."""

import numpy as np


def power_sum(data, p):
    s = np.einsum("c...,c...->...", data, data)
    if p == 2.0:
        return float(s.sum())
    return float(np.power(s, 0.5 * p).sum())


def fd_grad_power_energy(a, exponent, spacing, ndim, coef):
    w = np.abs(a) ** exponent
    total = 0.0
    for axis in range(ndim):
        d = np.zeros_like(w)
        for s, c in enumerate(coef, start=1):
            d += c * (np.roll(w, -s, axis=axis) - np.roll(w, s, axis=axis))
        d /= spacing[axis]
        total += float(np.vdot(d, d))
    return total


def periodic_convolve(f, kernel, weight):
    out = np.zeros_like(f)
    for idx in zip(*np.nonzero(f)):
        out += (weight * f[idx]) * np.roll(kernel, idx, axis=(0, 1, 2))
    return out
