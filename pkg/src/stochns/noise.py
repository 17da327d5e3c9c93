"""Truncated cylindrical Wiener process, the coefficient map sigma, and an
empirical audit of the growth / Lipschitz / gradient / L^2 assumptions.

Every mode of ``sigma(u)`` is the same divergence-free field scaled by its
weight ``a_k``:

    sigma(u) e_k = a_k * Leray(rho_eps * Phi(u)),

with ``Phi(u) = u`` (linear) or ``Phi(u) = u |u|^(1/2)`` (three-halves).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence, Union

import numpy as np

from .operators import leray_project, mollify
from .spectral import (
    LtwoSequenceField,
    RealVectorField,
    gradient_lp_norm,
    hs_lp_norm,
    lp_norm,
    lp_norm_array,
)

__all__ = [
    "NoiseModel",
    "WienerIncrement",
    "WienerPath",
    "wiener_increment",
    "sigma_base",
    "sigma_apply",
    "noise_field",
    "AuditReport",
    "noise_audit",
]

NoiseKind = Literal["linear_mollified", "three_halves_mollified"]
_KINDS = ("linear_mollified", "three_halves_mollified")


@dataclass(frozen=True)
class NoiseModel:
    kind: NoiseKind = "three_halves_mollified"
    K: int = 16
    weights: Union[str, Sequence[float]] = "inverse_k"
    eps: float = 1.0
    seed: int = 0
    a: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"noise kind must be one of {_KINDS}, got {self.kind!r}")
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")
        if isinstance(self.weights, str):
            if self.weights != "inverse_k":
                raise ValueError(f"unknown weight scheme {self.weights!r}")
            a = 1.0 / np.arange(1, self.K + 1)
        else:
            a = np.asarray(self.weights, dtype=np.float64)
            if a.shape != (self.K,):
                raise ValueError(f"expected {self.K} weights, got {a.size}")
            object.__setattr__(self, "weights", tuple(float(w) for w in a))
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ValueError("noise weights must be positive and finite")
        if np.any(np.diff(a) > 0):
            raise ValueError("noise weights must be nonincreasing")
        if not self.eps > 0:
            raise ValueError(f"mollifier width must be positive, got {self.eps}")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def weight_l2(self) -> float:
        return float(np.sqrt(np.sum(self.a ** 2)))


@dataclass(frozen=True)
class WienerIncrement:
    dW: np.ndarray
    dt: float
    step: int = 0

    def __post_init__(self):
        if self.dW.ndim != 1:
            raise ValueError("increments must be a flat array of length K")

    @property
    def K(self) -> int:
        return self.dW.size


def wiener_increment(seed: int, step: int, dt: float, K: int, stream: int = 0) -> WienerIncrement:
    """K independent N(0, dt) draws, a pure function of (seed, stream, step).

    ``stream`` separates ensemble members sharing a master seed.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    rng = np.random.default_rng([int(seed), int(stream), int(step)])
    return WienerIncrement(rng.normal(0.0, math.sqrt(dt), size=int(K)), float(dt), int(step))


class WienerPath:
    """Lazily generated, memoized increments; one frozen path can drive many runs."""

    def __init__(self, seed: int, dt: float, K: int, stream: int = 0, zero: bool = False):
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.seed, self.dt, self.K, self.stream = int(seed), float(dt), int(K), int(stream)
        self.zero = zero
        self._cache: dict[int, WienerIncrement] = {}

    def __getitem__(self, step: int) -> WienerIncrement:
        inc = self._cache.get(step)
        if inc is None:
            if self.zero:
                inc = WienerIncrement(np.zeros(self.K), self.dt, step)
            else:
                inc = wiener_increment(self.seed, step, self.dt, self.K, self.stream)
            self._cache[step] = inc
        return inc

    def values(self, nsteps: int) -> np.ndarray:
        """Brownian path W(t_j) for j = 0..nsteps, shape (nsteps + 1, K)."""
        inc = np.stack([self[j].dW for j in range(nsteps)]) if nsteps else np.zeros((0, self.K))
        return np.vstack([np.zeros((1, self.K)), np.cumsum(inc, axis=0)])


def _phi_map(kind: str, data: np.ndarray) -> np.ndarray:
    if kind == "linear_mollified":
        return data
    mag = np.sqrt(np.einsum("c...,c...->...", data, data))
    return data * np.sqrt(mag)


def sigma_base(model: NoiseModel, u: RealVectorField) -> RealVectorField:
    """The unweighted mode ``Leray(rho_eps * Phi(u))``."""
    return leray_project(mollify(u.with_data(_phi_map(model.kind, u.data)), model.eps))


def sigma_apply(model: NoiseModel, u: RealVectorField) -> LtwoSequenceField:
    base = sigma_base(model, u)
    a = model.a.reshape((-1,) + (1,) * base.data.ndim)
    return LtwoSequenceField(u.grid, a * base.data[None])


def noise_field(model: NoiseModel, base: RealVectorField, dW: WienerIncrement) -> RealVectorField:
    """``sum_k sigma(u) e_k dW_k``; exact because modes differ by scalar weights."""
    if dW.K != model.K:
        raise ValueError(f"increment has {dW.K} modes, model has {model.K}")
    return base * float(np.dot(model.a, dW.dW))


# ---------------------------------------------------------------------------
# assumption audit

@dataclass
class AuditReport:
    kind: str
    p: float
    growth_exponent: float
    growth: float = 0.0
    lipschitz: float = 0.0
    gradient: float = 0.0
    l2_growth: float = 0.0
    nonfinite: list = field(default_factory=list)
    nsamples: int = 0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "p": self.p,
            "growth_exponent": self.growth_exponent,
            "growth": self.growth,
            "lipschitz": self.lipschitz,
            "gradient": self.gradient,
            "l2_growth": self.l2_growth,
            "nonfinite": list(self.nonfinite),
            "nsamples": self.nsamples,
        }


def _ratio(num: float, den: float) -> float:
    if num == 0.0:
        return 0.0
    return num / den if den > 0 else math.inf


def noise_audit(model: NoiseModel, samples: Sequence[RealVectorField], p: float,
                eps_growth: float = 0.05, report: AuditReport | None = None) -> AuditReport:
    """Largest observed ratio LHS/RHS for each assumption over the samples.

    growth:    ||sigma(u)||_Lp      vs  ||u||_{3p/2 - eps}^2 + 1
    lipschitz: ||sigma(u)-sigma(v)||_Lp  vs  ||(|u|+|v|)^(1/2) |u-v| ||_p  (consecutive pairs)
    gradient:  ||grad sigma(u)||_Lp vs  ||u||_{3p/2}^2 + 1
    l2_growth: ||sigma(u)||_L2      vs  ||u||_2 + 1

    Passing an earlier ``report`` folds new samples into it (maxima only grow).
    """
    samples = list(samples)
    if not samples:
        raise ValueError("noise audit needs at least one sample")
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    q_growth = 1.5 * p - eps_growth
    rep = report or AuditReport(model.kind, float(p), q_growth)

    def note(name, value, idx):
        if not math.isfinite(value):
            rep.nonfinite.append({"inequality": name, "sample": idx})
        return value

    sigmas = []
    for i, u in enumerate(samples):
        s = sigma_apply(model, u)
        sigmas.append(s)
        g = _ratio(hs_lp_norm(s, p), lp_norm(u, q_growth) ** 2 + 1.0)
        gr = _ratio(gradient_lp_norm(s, p), lp_norm(u, 1.5 * p) ** 2 + 1.0)
        l2 = _ratio(hs_lp_norm(s, 2), lp_norm(u, 2) + 1.0)
        rep.growth = max(rep.growth, note("growth", g, i))
        rep.gradient = max(rep.gradient, note("gradient", gr, i))
        rep.l2_growth = max(rep.l2_growth, note("l2_growth", l2, i))
    for i in range(len(samples) - 1):
        u, v = samples[i].data, samples[i + 1].data
        lhs = hs_lp_norm(LtwoSequenceField(samples[i].grid, sigmas[i].data - sigmas[i + 1].data), p)
        weight = np.sqrt(np.sqrt(np.einsum("c...,c...->...", u, u))
                         + np.sqrt(np.einsum("c...,c...->...", v, v)))
        rhs = lp_norm_array(weight * (u - v), samples[i].grid, p)
        rep.lipschitz = max(rep.lipschitz, note("lipschitz", _ratio(lhs, rhs), i))
    rep.nsamples += len(samples)
    return rep
