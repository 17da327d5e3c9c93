"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``STOCHNS_PURE_PYTHON=1``
to force the NumPy fallback. Both expose ``power_sum``,
``fd_grad_power_energy`` and ``periodic_convolve`` on arrays viewed as 3-D
(2-D grids carry a trailing axis of length one).
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("STOCHNS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

# centered first-derivative stencils, coefficient of (f[i+s] - f[i-s])
FD_COEFFICIENTS = {
    2: (0.5,),
    4: (2.0 / 3.0, -1.0 / 12.0),
    6: (0.75, -3.0 / 20.0, 1.0 / 60.0),
}


def as3d(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim == 2:
        return a[:, :, None]
    return a


def power_sum(data, p, impl=None):
    """Return sum_x |data(x)|**p where |.| is the Euclidean norm over axis 0."""
    if impl is None:
        # vectorized pow beats the scalar libm call for fractional exponents
        impl = _impl if float(p).is_integer() else _kernels_py
    data = np.ascontiguousarray(data, dtype=np.float64)
    if data.ndim == 3:
        data = data[..., None]
    return impl.power_sum(data, float(p))


def fd_grad_power_energy(a, exponent, spacing, order=2, impl=None):
    """Return sum_x |grad_h (|a|**exponent)|**2 (no volume weight)."""
    impl = impl or _impl
    ndim = np.ndim(a)
    coef = np.asarray(FD_COEFFICIENTS[order], dtype=np.float64)
    sp = np.ones(3)
    sp[:ndim] = spacing
    return impl.fd_grad_power_energy(as3d(a), float(exponent), sp, ndim, coef)


def periodic_convolve(f, kernel, weight, impl=None):
    impl = impl or _impl
    shape = np.shape(f)
    out = impl.periodic_convolve(as3d(f), as3d(kernel), float(weight))
    return np.asarray(out).reshape(shape)
