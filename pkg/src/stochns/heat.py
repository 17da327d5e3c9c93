"""Stochastic heat equation ``du = (Lap u + F) dt + g dW`` by exponential
Euler-Maruyama, plus the L^p dissipation identity and the interpolation
exponent of the energy estimate.

``F`` is the drift already in divergence form (the caller supplies grad f).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import PreconditionError, SolverError
from .ledger import ENERGY_FD_ORDER, EnergyLedger, energy_sample, grad_power_energy
from .noise import WienerIncrement, WienerPath
from .spectral import Grid, LtwoSequenceField, RealVectorField, fft_real, ifft_real

__all__ = [
    "HeatState",
    "heat_symbol",
    "heat_step",
    "heat_solve",
    "step_count",
    "dissipation_identity_check",
    "interpolation_exponent",
    "interpolation_window",
]


@dataclass(frozen=True)
class HeatState:
    t: float
    u: RealVectorField
    step_index: int = 0

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"time must be nonnegative, got {self.t}")


@lru_cache(maxsize=32)
def _heat_symbol(grid: Grid, dt: float) -> np.ndarray:
    sym = np.exp(-(2 * math.pi) ** 2 * grid.xi_squared(half=True) * dt)
    sym.setflags(write=False)
    return sym


def heat_symbol(grid: Grid, dt: float) -> np.ndarray:
    """``exp(-|2 pi xi|^2 dt)`` on the half spectrum."""
    return _heat_symbol(grid, float(dt))


def step_count(T: float, dt: float) -> int:
    if not T > 0 or not dt > 0:
        raise ValueError(f"T and dt must be positive, got T={T}, dt={dt}")
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * T:
        raise ValueError(f"dt={dt} does not divide T={T}")
    return n


def heat_step(state: HeatState, f: Optional[RealVectorField], g: Optional[LtwoSequenceField],
              dW: Optional[WienerIncrement], dt: float) -> HeatState:
    """One exponential Euler-Maruyama step; ``f`` and ``g`` may be None (zero)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    u = state.u
    grid = u.grid
    rhs = u.data.copy()
    if f is not None:
        rhs += dt * f.data
    if g is not None:
        if dW is None or dW.K != g.K:
            raise ValueError(f"noise has {g.K} modes but increment has "
                             f"{None if dW is None else dW.K}")
        rhs += np.tensordot(dW.dW, g.data, axes=(0, 0))
    new = ifft_real(grid, fft_real(grid, rhs) * heat_symbol(grid, dt))
    if not np.all(np.isfinite(new)):
        raise SolverError("non-finite heat state", state.step_index + 1)
    return HeatState(state.t + dt, RealVectorField(grid, new), state.step_index + 1)


Forcing = Callable[[float, RealVectorField], Optional[RealVectorField]]
Coefficient = Callable[[float, RealVectorField], Optional[LtwoSequenceField]]


def heat_solve(u0: RealVectorField, f: Optional[Forcing], g: Optional[Coefficient], T: float,
               dt: float, seed: int = 0, p: float = 4.0, K: Optional[int] = None,
               stream: int = 0, path: Optional[WienerPath] = None,
               keep_every: int = 1, fd_order: int = ENERGY_FD_ORDER):
    """Integrate to ``T``; return (sampled states, ledger).

    ``f(t, u)`` gives the drift and ``g(t, u)`` the noise coefficient at the
    left end of each step. States are kept every ``keep_every`` steps (the
    final state is always kept); the ledger records every step.
    """
    nsteps = step_count(T, dt)
    state = HeatState(0.0, u0, 0)
    ledger = EnergyLedger(p)
    ledger.record(0.0, energy_sample(u0, p, fd_order))
    traj = [state]
    for j in range(nsteps):
        fj = f(state.t, state.u) if f is not None else None
        gj = g(state.t, state.u) if g is not None else None
        dW = None
        if gj is not None:
            if path is None:
                path = WienerPath(seed, dt, K or gj.K, stream)
            dW = path[j]
        state = heat_step(state, fj, gj, dW, dt)
        state = HeatState((j + 1) * dt, state.u, j + 1)
        ledger.record(state.t, energy_sample(state.u, p, fd_order))
        if (j + 1) % keep_every == 0 or j + 1 == nsteps:
            traj.append(state)
    return traj, ledger


def dissipation_identity_check(u: RealVectorField, p: float, order: int = ENERGY_FD_ORDER):
    """Return (lhs, rhs, relative error) of

        p sum_j int |u_j|^{p-2} u_j Lap u_j dx = -(4(p-1)/p) sum_j int |grad |u_j|^{p/2}|^2 dx.

    The Laplacian is spectral, the gradient of ``|u_j|^{p/2}`` is a centered
    finite difference of the given order.
    """
    if not p > 2:
        raise PreconditionError(f"the identity needs p > 2, got {p}")
    grid = u.grid
    lap = ifft_real(grid, fft_real(grid, u.data)
                    * (-(2 * math.pi) ** 2 * grid.xi_squared(half=True)))
    lhs = p * float(np.sum(np.abs(u.data) ** (p - 2) * u.data * lap)) * grid.volume_element
    rhs = -(4 * (p - 1) / p) * grad_power_energy(u, p, order)
    scale = max(abs(lhs), abs(rhs))
    rel = abs(lhs - rhs) / scale if scale > 0 else 0.0
    return lhs, rhs, rel


def interpolation_window(p: float, d: int) -> tuple[float, float]:
    """Admissible q range ``(d p / (p + d - 2), p]``."""
    return d * p / (p + d - 2), p


def interpolation_exponent(p: float, q: float, d: int = 3) -> float:
    """``alpha = d (p - q) / (p q - 2 q)`` for q in the admissible window."""
    if not p > 2:
        raise PreconditionError(f"need p > 2, got {p}")
    lo, hi = interpolation_window(p, d)
    if not lo < q <= hi:
        raise PreconditionError(f"q={q} outside the admissible window ({lo:g}, {hi:g}]")
    alpha = d * (p - q) / (p * q - 2 * q)
    assert 0.0 <= alpha <= 1.0, alpha
    return alpha
