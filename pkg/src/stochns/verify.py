"""Property suites behind ``verify-operators``.

Each suite returns a :class:`SuiteResult` with the worst observed value and
the tolerance it was held to.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, List

import numpy as np

from .operators import (
    bessel_potential,
    cutoff_phi,
    CutoffSpec,
    gaussian_projector,
    gaussian_projector_direct,
    leray_project,
    lipschitz_quadrature_constant,
    mollify,
)
from .spectral import (
    Grid,
    RealVectorField,
    apply_multiplier,
    forward_transform,
    gradient_lp_norm,
    inverse_transform,
    lp_norm,
    spectral_divergence,
    spectral_gradient,
)

__all__ = ["SuiteResult", "random_fields", "smooth_fields", "run_all", "SUITES"]


@dataclass
class SuiteResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    cases: int

    def to_dict(self) -> dict:
        return asdict(self)


def random_fields(grid: Grid, count: int, seed: int = 0) -> Iterable[RealVectorField]:
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield RealVectorField(grid, rng.standard_normal((grid.d,) + grid.dims))


def smooth_fields(grid: Grid, count: int, seed: int = 0) -> Iterable[RealVectorField]:
    from .fields import random_smooth_field

    for i in range(count):
        yield random_smooth_field(grid, seed * 1000 + i, 1.0, 3.0)


def _result(name, values, tol, upper=True) -> SuiteResult:
    values = list(values)
    worst = max(values) if upper else min(values)
    passed = all(np.isfinite(values)) and (worst <= tol if upper else worst >= tol)
    return SuiteResult(name, bool(passed), float(worst), float(tol), len(values))


def suite_round_trip(grid, count, p):
    vals = []
    for f in random_fields(grid, count, 1):
        back = inverse_transform(forward_transform(f))
        vals.append(np.max(np.abs(back.data - f.data)) / np.max(np.abs(f.data)))
    return _result("round_trip", vals, 1e-12)


def suite_parseval(grid, count, p):
    vals = []
    for f in random_fields(grid, count, 2):
        F = forward_transform(f)
        rhs = float(np.sum(np.abs(F.data) ** 2)) / grid.volume
        vals.append(abs(lp_norm(f, 2) ** 2 - rhs) / rhs)
    return _result("parseval", vals, 1e-10)


def suite_multiplier_composition(grid, count, p):
    m1 = lambda *xi: np.exp(-sum(x * x for x in xi))  # noqa: E731
    m2 = lambda *xi: 1j * 2 * np.pi * xi[0]  # noqa: E731
    vals = []
    for f in random_fields(grid, count, 3):
        F = forward_transform(f)
        a = apply_multiplier(apply_multiplier(F, m1), m2).data
        b = apply_multiplier(F, lambda *xi: m1(*xi) * m2(*xi)).data
        vals.append(np.max(np.abs(a - b)) / np.max(np.abs(F.data)))
    return _result("multiplier_composition", vals, 1e-13)


def suite_contraction(grid, count, p):
    vals = []
    for f in random_fields(grid, count, 4):
        for n in (1.0, 2.0, 8.0):
            Pf = gaussian_projector(f, n)
            for q in (2.0, 4.0, p):
                vals.append(lp_norm(Pf, q) / lp_norm(f, q))
    return _result("projector_contraction", vals, 1.0 + 1e-10)


def suite_direct(grid, count, p, n=2.0):
    vals = []
    for f in random_fields(grid, max(1, min(count, 5)), 5):
        a = gaussian_projector(f, n).data
        b = gaussian_projector_direct(f, n).data
        vals.append(np.max(np.abs(a - b)) / np.max(np.abs(b)))
    return _result("fft_vs_direct", vals, 1e-10)


def suite_lipschitz(grid, count, p):
    C = lipschitz_quadrature_constant(grid.d)
    vals = []
    for f in smooth_fields(grid, count, 6):
        for n, m in ((2.0, 4.0), (4.0, 8.0), (8.0, 16.0)):
            for q in (2.0, p):
                lhs = lp_norm(gaussian_projector(f, n) - gaussian_projector(f, m), q)
                rhs = C * abs(1 / n - 1 / m) * gradient_lp_norm(f, q)
                vals.append(lhs / rhs)
    return _result("lipschitz_in_inverse_level", vals, 1.0)


def suite_leray(grid, count, p):
    idem, div, comm, grad_kill = [], [], [], []
    for f in random_fields(grid, count, 7):
        Pf = leray_project(f)
        n2 = lp_norm(f, 2)
        idem.append(lp_norm(leray_project(Pf) - Pf, 2) / n2)
        div.append(spectral_divergence(Pf) / n2)
        c = leray_project(gaussian_projector(f, 2.0)) - gaussian_projector(Pf, 2.0)
        comm.append(lp_norm(c, 2) / n2)
        grad = RealVectorField(grid, spectral_gradient(f.data[0], grid))
        grad_kill.append(lp_norm(leray_project(grad), 2) / lp_norm(grad, 2))
    return [_result("leray_idempotence", idem, 1e-12),
            _result("leray_divergence", div, 1e-10),
            _result("leray_commutes_with_projector", comm, 1e-12),
            _result("leray_annihilates_gradients", grad_kill, 1e-12)]


def suite_bessel(grid, count, p):
    vals = []
    for f in random_fields(grid, count, 8):
        back = bessel_potential(bessel_potential(f, -2.0), 2.0)
        vals.append(lp_norm(back - f, 2) / lp_norm(f, 2))
    return _result("bessel_round_trip", vals, 1e-12)


def suite_mollifier(grid, count, p):
    eps = min(grid.extent) / 8
    vals = []
    for f in random_fields(grid, count, 9):
        g = mollify(f, eps)
        for q in (2.0, p):
            vals.append(lp_norm(g, q) / lp_norm(f, q))
    return _result("mollifier_contraction", vals, 1.0 + 1e-10)


def suite_cutoff(grid, count, p):
    spec = CutoffSpec(1.0)
    t = np.linspace(0.0, 6.0, 6001)
    phi = cutoff_phi(t, spec)
    errs = [abs(cutoff_phi(0.0, spec) - 1.0), abs(cutoff_phi(5.0, spec)),
            abs(cutoff_phi(3.0, spec) - 0.5),
            float(np.max(phi) - 1.0 if np.max(phi) > 1 else 0.0),
            float(-np.min(phi) if np.min(phi) < 0 else 0.0)]
    slope = np.max(np.abs(np.diff(phi)) / np.diff(t))
    errs.append(max(0.0, slope - spec.lipschitz * (1 + 1e-6)))
    return _result("cutoff_profile", errs, 1e-15)


SUITES: List[Callable] = [
    suite_round_trip, suite_parseval, suite_multiplier_composition, suite_contraction,
    suite_lipschitz, suite_leray, suite_bessel, suite_mollifier, suite_cutoff,
]


def run_all(grid: Grid, direct_grid: Grid, count: int, p: float) -> List[SuiteResult]:
    out: List[SuiteResult] = []
    for suite in SUITES:
        res = suite(grid, count, p)
        out.extend(res if isinstance(res, list) else [res])
    out.append(suite_direct(direct_grid, count, p))
    return out
