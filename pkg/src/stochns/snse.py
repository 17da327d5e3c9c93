"""Truncated stochastic Navier-Stokes system on the periodic box,

    du = [Lap u - phi(||u||_p)^2 P_k Leray div(u (x) P_k u)] dt
         + phi(||u||_p)^2 P_k sigma(P_k u) dW,

stepped by exponential Euler-Maruyama, together with the Picard scheme that
freezes the coefficients at the previous iterate, and the initial-data
preparation ``P_k Leray(phi(|x - x_c| / n) u_0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from . import kernels
from .errors import SolverError
from .heat import heat_symbol, step_count
from .ledger import ENERGY_FD_ORDER, EnergyLedger, energy_sample
from .noise import NoiseModel, WienerPath, _phi_map
from .operators import CutoffSpec, gaussian_symbol, leray_hat, mollifier_symbol
from .spectral import Grid, RealVectorField, fft_real, ifft_real, lp_norm

__all__ = [
    "SnseConfig",
    "SnseState",
    "SnseResult",
    "dealias_mask",
    "convective_term",
    "nonlinear_term",
    "noise_coefficient",
    "snse_step",
    "SnseSolver",
    "snse_solve",
    "picard_iterate",
    "picard_study",
    "picard_horizon_sweep",
    "PicardSweep",
    "geometric_fit_r2",
    "prepare_initial_data",
    "spatial_cutoff",
    "k_schedule",
]


@dataclass(frozen=True)
class SnseConfig:
    grid: Grid
    p: float = 4.0
    k: float = 8.0
    N: float = 5.0
    noise: Optional[NoiseModel] = None
    dt: float = 0.01
    T: float = 2.0
    seed: int = 0
    dealias: bool = False

    def __post_init__(self):
        if not self.p > 2:
            raise ValueError(f"p must exceed 2, got {self.p}")
        if not self.k >= 1:
            raise ValueError(f"projector level k must be >= 1, got {self.k}")
        if not self.N > 0:
            raise ValueError(f"cutoff level N must be positive, got {self.N}")
        step_count(self.T, self.dt)
        if self.noise is not None and not 0 < self.noise.eps < min(self.grid.extent) / 2:
            raise ValueError(f"noise.eps must lie in (0, L/2), got {self.noise.eps}")

    @property
    def nsteps(self) -> int:
        return step_count(self.T, self.dt)

    @property
    def cutoff(self) -> CutoffSpec:
        return CutoffSpec(self.N)

    def with_(self, **changes) -> "SnseConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class SnseState:
    t: float
    u: RealVectorField
    step_index: int = 0
    phi: float = 1.0


# ---------------------------------------------------------------------------
# spectral building blocks (half spectrum, component axis first)

def dealias_mask(grid: Grid) -> np.ndarray:
    """2/3-rule mask: keep |m_a| < n_a / 3 on every axis."""
    mask = np.ones(grid.spectral_shape(half=True), dtype=bool)
    for a in range(grid.d):
        m = np.abs(grid.axis_frequencies(a, half=True) * grid.extent[a])
        shape = [1] * grid.d
        shape[a] = m.size
        mask &= (m < grid.dims[a] / 3).reshape(shape)
    return mask


def _project_hat(hat: np.ndarray, grid: Grid, k: Optional[float]) -> np.ndarray:
    return hat if k is None else hat * gaussian_symbol(grid, k)


def _convective_hat(u: np.ndarray, v: np.ndarray, grid: Grid) -> np.ndarray:
    """Leray div(u (x) v) on the half spectrum, i.e. the transform of
    Leray sum_i d_i (u_i v)."""
    d = grid.d
    xi = grid.derivative_wavevectors(half=True)
    out = np.zeros((d,) + grid.spectral_shape(half=True), dtype=np.complex128)
    for i in range(d):
        prod = fft_real(grid, u[i][None] * v)
        out += (2j * math.pi * xi[i]) * prod
    return leray_hat(out, grid)


def convective_term(u: RealVectorField, v: Optional[RealVectorField] = None,
                    k: Optional[float] = None) -> RealVectorField:
    """``P_k Leray sum_i d_i (u_i P_k v)`` with v = u by default; k=None drops P_k."""
    grid = u.grid
    v = u if v is None else v
    vd = v.data if k is None else ifft_real(grid, _project_hat(fft_real(grid, v.data), grid, k))
    hat = _project_hat(_convective_hat(u.data, vd, grid), grid, k)
    return RealVectorField(grid, ifft_real(grid, hat))


def _phi(cfg: SnseConfig, u: np.ndarray) -> float:
    norm = (kernels.power_sum(u, cfg.p) * cfg.grid.volume_element) ** (1.0 / cfg.p)
    return cfg.cutoff(norm)


def nonlinear_term(u: RealVectorField, cfg: SnseConfig) -> RealVectorField:
    """``phi(||u||_p)^2 P_k Leray sum_i d_i (u_i P_k u)``.

    The stepper subtracts this, so it enters the equation as the usual
    ``-(u . grad) u`` transport.
    """
    phi = _phi(cfg, u.data)
    if phi == 0.0:
        return RealVectorField.zeros(u.grid)
    out = convective_term(u, k=cfg.k).data * phi ** 2
    if cfg.dealias:
        out = ifft_real(u.grid, fft_real(u.grid, out) * dealias_mask(u.grid))
    return RealVectorField(u.grid, out)


def _noise_hat(model: NoiseModel, v: np.ndarray, grid: Grid, k: float) -> np.ndarray:
    """Transform of ``P_k Leray(rho_eps * Phi(v))`` (the unweighted mode)."""
    hat = fft_real(grid, _phi_map(model.kind, v)) * mollifier_symbol(grid, model.eps)
    return leray_hat(hat, grid) * gaussian_symbol(grid, k)


def noise_coefficient(u: RealVectorField, cfg: SnseConfig) -> RealVectorField:
    """Unweighted noise mode ``phi^2 P_k sigma(P_k u)`` (scale by a_k for mode k)."""
    grid = u.grid
    if cfg.noise is None:
        return RealVectorField.zeros(grid)
    phi = _phi(cfg, u.data)
    v = ifft_real(grid, fft_real(grid, u.data) * gaussian_symbol(grid, cfg.k))
    return RealVectorField(grid, phi ** 2 * ifft_real(grid, _noise_hat(cfg.noise, v, grid, cfg.k)))


# ---------------------------------------------------------------------------
# stepping

def _increment_hat(cfg: SnseConfig, u: np.ndarray, u_hat: np.ndarray, coef: float,
                   noise_scale: float, drift_src: Optional[np.ndarray] = None,
                   drift_src_hat: Optional[np.ndarray] = None) -> np.ndarray:
    """``coef * (-dt B + noise_scale * N)`` on the half spectrum.

    B and N are evaluated at ``drift_src`` (defaults to ``u``); used both by
    the direct stepper and by the Picard scheme with frozen coefficients.
    """
    grid = cfg.grid
    src = u if drift_src is None else drift_src
    src_hat = u_hat if drift_src_hat is None else drift_src_hat
    Sk = gaussian_symbol(grid, cfg.k)
    v = ifft_real(grid, src_hat * Sk)
    inc = -cfg.dt * _convective_hat(src, v, grid) * Sk
    if cfg.noise is not None and noise_scale != 0.0:
        inc += noise_scale * _noise_hat(cfg.noise, v, grid, cfg.k)
    if cfg.dealias:
        inc *= dealias_mask(grid)
    return coef * inc


def snse_step(state: SnseState, cfg: SnseConfig, dW) -> SnseState:
    """One exponential Euler-Maruyama step of the truncated system."""
    grid = cfg.grid
    u = state.u.data
    u_hat = fft_real(grid, u)
    phi = _phi(cfg, u)
    rhs = u_hat
    if phi > 0.0:
        scale = float(np.dot(cfg.noise.a, dW.dW)) if (cfg.noise is not None and dW is not None) else 0.0
        rhs = u_hat + _increment_hat(cfg, u, u_hat, phi * phi, scale)
    new = ifft_real(grid, rhs * heat_symbol(grid, cfg.dt))
    if not np.all(np.isfinite(new)):
        raise SolverError("non-finite velocity", state.step_index + 1)
    return SnseState((state.step_index + 1) * cfg.dt, RealVectorField(grid, new),
                     state.step_index + 1, phi)


@dataclass
class SnseResult:
    trajectory: list
    ledger: EnergyLedger
    stopping: object  # monitors.StoppingRecord
    prepared: RealVectorField
    k: float


class SnseSolver:
    """Direct stepper with ledger and stopping monitor attached.

    Several solvers sharing one :class:`WienerPath` can be advanced in
    lockstep (coupled runs, Cauchy studies).
    """

    def __init__(self, cfg: SnseConfig, u0: RealVectorField, path: Optional[WienerPath] = None,
                 stream: int = 0, monitor=None, keep_every: int = 0,
                 fd_order: int = ENERGY_FD_ORDER, record: bool = True):
        if u0.grid != cfg.grid:
            raise ValueError("initial data lives on a different grid")
        self.cfg = cfg
        if path is None and cfg.noise is not None:
            path = WienerPath(cfg.seed, cfg.dt, cfg.noise.K, stream)
        self.path = path
        self.monitor = monitor
        self.keep_every = keep_every
        self.fd_order = fd_order
        self.record = record
        self.ledger = EnergyLedger(cfg.p)
        data = u0.data
        if cfg.dealias:
            data = ifft_real(cfg.grid, fft_real(cfg.grid, data) * dealias_mask(cfg.grid))
        self.state = SnseState(0.0, RealVectorField(cfg.grid, data), 0, _phi(cfg, data))
        self.trajectory = [self.state] if keep_every else []
        self._log(self.state)

    def _log(self, state: SnseState, u_hat: Optional[np.ndarray] = None) -> None:
        if not self.record:
            return
        sample = energy_sample(state.u, self.cfg.p, self.fd_order, hat=u_hat)
        stopped = False
        if self.monitor is not None:
            stopped = self.monitor.update(state.t, sample.lp_p, sample.l3p_p)
        self.ledger.record(state.t, sample, state.phi, stopped)

    @property
    def done(self) -> bool:
        return self.state.step_index >= self.cfg.nsteps

    def step(self) -> SnseState:
        j = self.state.step_index
        dW = self.path[j] if self.path is not None else None
        self.state = snse_step(self.state, self.cfg, dW)
        self._log(self.state)
        if self.keep_every and (self.state.step_index % self.keep_every == 0 or self.done):
            self.trajectory.append(self.state)
        return self.state

    def run(self) -> "SnseSolver":
        while not self.done:
            self.step()
        return self


# ---------------------------------------------------------------------------
# initial data

def spatial_cutoff(grid: Grid, n: float) -> np.ndarray:
    """``phi(|x - x_c| / n)`` with the N = 1 profile, centered in the box."""
    if not n >= 1:
        raise ValueError(f"cutoff level n must be >= 1, got {n}")
    r2 = sum((x - 0.5 * L) ** 2 for x, L in zip(grid.coords, grid.extent))
    return np.asarray(CutoffSpec(1.0)(np.sqrt(r2) / n))


def prepare_initial_data(u0_raw: RealVectorField, n: float, k: float) -> RealVectorField:
    """``P_k Leray(phi(|x - x_c| / n) u0)``; divergence-free."""
    grid = u0_raw.grid
    hat = fft_real(grid, u0_raw.data * spatial_cutoff(grid, n))
    hat = leray_hat(hat, grid) * gaussian_symbol(grid, k)
    return RealVectorField(grid, ifft_real(grid, hat))


def k_schedule(n_list: Sequence[int], mode: Literal["identity", "l2_offset"] = "identity",
               u0_raw: Optional[RealVectorField] = None) -> list:
    """Projector levels for the approximation levels in ``n_list``.

    ``identity``: k(n) = n. ``l2_offset``: k(n) is the smallest integer
    strictly above both ``(n + 1) ||phi(./(n+1)) u0||_2^2`` and the previous
    level's k.
    """
    if mode == "identity":
        return [float(n) for n in n_list]
    if mode != "l2_offset":
        raise ValueError(f"unknown k schedule {mode!r}")
    if u0_raw is None:
        raise ValueError("the l2_offset schedule needs the initial data")
    out, prev = [], 0
    for n in n_list:
        w = u0_raw.data * spatial_cutoff(u0_raw.grid, n + 1)
        target = (n + 1) * lp_norm(RealVectorField(u0_raw.grid, w), 2) ** 2
        k = max(math.floor(target) + 1, prev + 1)
        out.append(float(k))
        prev = k
    return out


def snse_solve(cfg: SnseConfig, u0_raw: RealVectorField, n_level: float,
               M: Optional[float] = None, K_bound: Optional[float] = None,
               path: Optional[WienerPath] = None, stream: int = 0, keep_every: int = 0,
               prepare: bool = True) -> SnseResult:
    """Prepare the data at level ``n_level``, run to ``T`` with the stopping
    monitor attached, and return trajectory, ledger and stopping record."""
    from .monitors import StoppingMonitor, quarter_bound

    u0 = prepare_initial_data(u0_raw, n_level, cfg.k) if prepare else u0_raw
    K_bound = K_bound if K_bound is not None else max(1.0, lp_norm(u0, cfg.p))
    M0 = quarter_bound(u0, cfg.p, K_bound)
    M = M if M is not None else M0
    monitor = StoppingMonitor(M, K_bound, cfg.p, M0=M0)
    solver = SnseSolver(cfg, u0, path=path, stream=stream, monitor=monitor, keep_every=keep_every)
    solver.run()
    return SnseResult(solver.trajectory, solver.ledger, monitor.record(), u0, cfg.k)


# ---------------------------------------------------------------------------
# Picard scheme

def _heat_flow(cfg: SnseConfig, u0: np.ndarray) -> list:
    grid = cfg.grid
    E = heat_symbol(grid, cfg.dt)
    hat = fft_real(grid, u0)
    out = [u0]
    for _ in range(cfg.nsteps):
        hat = hat * E
        out.append(ifft_real(grid, hat))
    return out


def picard_iterate(prev: Sequence[np.ndarray], cfg: SnseConfig, path: Optional[WienerPath],
                   u0: Optional[np.ndarray] = None) -> list:
    """One Picard sweep on the step grid.

    ``prev`` holds the previous iterate at t_0..t_n (arrays of shape
    (d, *dims)). Drift and noise are evaluated on the previous iterate; the
    cutoff is ``phi(||u_new||_p) phi(||u_prev||_p)``. ``u0`` defaults to
    ``prev[0]``.
    """
    n = cfg.nsteps
    if len(prev) != n + 1:
        raise ValueError(f"previous iterate has {len(prev)} samples, horizon needs {n + 1}")
    grid = cfg.grid
    E = heat_symbol(grid, cfg.dt)
    cur = np.asarray(prev[0] if u0 is None else u0, dtype=np.float64)
    out = [cur]
    for j in range(n):
        w = np.asarray(prev[j])
        cur_hat = fft_real(grid, cur)
        coef = _phi(cfg, cur) * _phi(cfg, w)
        rhs = cur_hat
        if coef > 0.0:
            scale = 0.0
            if cfg.noise is not None and path is not None:
                scale = float(np.dot(cfg.noise.a, path[j].dW))
            rhs = cur_hat + _increment_hat(cfg, cur, cur_hat, coef, scale,
                                           drift_src=w, drift_src_hat=fft_real(grid, w))
        cur = ifft_real(grid, rhs * E)
        if not np.all(np.isfinite(cur)):
            raise SolverError("non-finite Picard iterate", j + 1)
        out.append(cur)
    return out


def picard_study(cfg: SnseConfig, u0: RealVectorField, iterations: int,
                 path: Optional[WienerPath] = None) -> np.ndarray:
    """Distances ``D_m = sup_t ||u^(m+1) - u^(m)||_p`` for m = 0..iterations-1,
    starting from the heat flow of ``u0``."""
    grid = cfg.grid
    it = _heat_flow(cfg, u0.data)
    D = []
    for _ in range(iterations):
        nxt = picard_iterate(it, cfg, path, u0.data)
        D.append(max((kernels.power_sum(a - b, cfg.p) * grid.volume_element) ** (1 / cfg.p)
                     for a, b in zip(nxt, it)))
        it = nxt
    return np.asarray(D)


def geometric_fit_r2(D: Sequence[float]) -> float:
    """R^2 of a least-squares line through ``log D_m`` against m."""
    y = np.log(np.asarray(D, dtype=np.float64))
    m = np.arange(y.size)
    A = np.vstack([np.ones_like(m), m]).T.astype(np.float64)
    coef = np.linalg.lstsq(A, y, rcond=None)[0]
    ss_res = float(np.sum((y - A @ coef) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


@dataclass
class PicardSweep:
    horizons: list
    passed: list
    t_star: Optional[float]
    distances: dict = field(default_factory=dict)


def picard_horizon_sweep(cfg: SnseConfig, u0: RealVectorField, horizons: Sequence[float],
                         seeds: Sequence[int], steps: int = 40, iterations: int = 7,
                         r2_min: float = 0.95) -> PicardSweep:
    """Largest horizon in ``horizons`` on which every seed contracts
    (all ``D_{m+1}/D_m < 1``) with a geometric fit of R^2 >= ``r2_min``.

    Horizons are scanned in increasing order and the scan stops at the first
    failure, so ``t_star`` bounds a contiguous passing range.
    """
    out = PicardSweep([], [], None)
    for T in sorted(horizons):
        c = cfg.with_(T=T, dt=T / steps)
        ok = True
        for s in seeds:
            path = WienerPath(s, c.dt, c.noise.K) if c.noise is not None else None
            D = picard_study(c.with_(seed=s), u0, iterations, path)
            out.distances[(T, s)] = D
            if not (np.all(D > 0) and np.all(D[1:] < D[:-1]) and geometric_fit_r2(D) >= r2_min):
                ok = False
                break
        out.horizons.append(T)
        out.passed.append(ok)
        if not ok:
            break
        out.t_star = T
    return out
