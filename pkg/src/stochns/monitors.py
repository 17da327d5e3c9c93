"""Stopping times, Cauchy distances between approximation levels, the Sobolev
ratio, and coupled-run uniqueness checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from . import kernels
from .errors import PreconditionError
from .ledger import ENERGY_FD_ORDER, EnergyLedger, grad_power_energy
from .noise import WienerPath
from .snse import SnseConfig, SnseSolver, k_schedule, prepare_initial_data
from .spectral import RealVectorField, lp_norm, lp_norm_array

__all__ = [
    "StoppingRecord",
    "StoppingMonitor",
    "stopping_monitor",
    "quarter_bound",
    "sobolev_ratio",
    "CauchyReport",
    "CauchyStudy",
    "cauchy_study",
    "uniqueness_check",
    "UniquenessReport",
]


@dataclass(frozen=True)
class StoppingRecord:
    M: float
    K: float
    triggered: bool
    tau: float
    functional_at_tau: float
    step: Optional[int] = None
    M0: Optional[float] = None

    @property
    def quarter_bound_ok(self) -> Optional[bool]:
        return None if self.M0 is None else self.M >= self.M0

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "K": self.K,
            "triggered": self.triggered,
            "tau": None if math.isinf(self.tau) else self.tau,
            "functional_at_tau": None if math.isnan(self.functional_at_tau) else self.functional_at_tau,
            "step": self.step,
            "M0": self.M0,
            "quarter_bound_ok": self.quarter_bound_ok,
        }


def _check_MK(M: float, K: float) -> None:
    if not M >= 1 or not K >= 1:
        raise PreconditionError(f"need M >= 1 and K >= 1, got M={M}, K={K}")


class StoppingMonitor:
    """Streaming fold for ``sup_[0,t] ||u||_p^p + int_0^t ||u||_3p^p ds >= M K^p``."""

    def __init__(self, M: float, K: float, p: float, M0: Optional[float] = None):
        _check_MK(M, K)
        self.M, self.K, self.p, self.M0 = float(M), float(K), float(p), M0
        self.threshold = M * K ** p
        self._sup = 0.0
        self._int = 0.0
        self._prev: Optional[tuple[float, float]] = None
        self._count = 0
        self.tau = math.inf
        self.step: Optional[int] = None
        self.value = math.nan

    @property
    def triggered(self) -> bool:
        return self.step is not None

    def update(self, t: float, lp_p: float, l3p_p: float) -> bool:
        """Feed one time sample; return True once the threshold has been reached."""
        if self._prev is not None:
            t0, g0 = self._prev
            self._int += 0.5 * (t - t0) * (g0 + l3p_p)
        self._prev = (t, l3p_p)
        self._sup = max(self._sup, lp_p)
        value = self._sup + self._int
        if self.step is None and value >= self.threshold:
            self.tau, self.step, self.value = float(t), self._count, value
        self._count += 1
        return self.triggered

    def record(self) -> StoppingRecord:
        return StoppingRecord(self.M, self.K, self.triggered, self.tau, self.value, self.step, self.M0)


def stopping_monitor(ledger: EnergyLedger, M: float, K: float, p: float,
                     M0: Optional[float] = None) -> StoppingRecord:
    """First ledger row where the stopping functional reaches ``M K^p``."""
    _check_MK(M, K)
    value = ledger.stopping_functional()
    hits = np.flatnonzero(value >= M * K ** p)
    if hits.size == 0:
        return StoppingRecord(float(M), float(K), False, math.inf, math.nan, None, M0)
    i = int(hits[0])
    return StoppingRecord(float(M), float(K), True, float(ledger.t[i]), float(value[i]), i, M0)


def quarter_bound(u0: RealVectorField, p: float, K: float) -> float:
    """Smallest ``M0 >= 1`` with ``sum_j ||u0_j||_p^p + ||u0||_p^p <= M0 K^p / 4``."""
    dV = u0.grid.volume_element
    total = sum(kernels.power_sum(u0.data[j][None], p) for j in range(u0.grid.d)) * dV
    total += kernels.power_sum(u0.data, p) * dV
    return max(1.0, 4.0 * float(total) / K ** p)


def sobolev_ratio(v: RealVectorField, p: float, order: int = ENERGY_FD_ORDER,
                  mean_tol: float = 1e-8) -> float:
    """``max_j ||v_j||_3p^p / ||grad |v_j|^{p/2}||_2^2`` (0/0 read as 0)."""
    grid = v.grid
    scale = lp_norm(v, 2) / math.sqrt(grid.volume)
    means = v.mean()
    if scale > 0 and np.max(np.abs(means)) > mean_tol * scale:
        raise PreconditionError("sobolev_ratio needs mean-zero components")
    best = 0.0
    for j in range(grid.d):
        comp = v.data[j]
        num = lp_norm_array(comp, grid, 3 * p) ** p
        den = kernels.fd_grad_power_energy(comp, 0.5 * p, grid.spacing, order) * grid.volume_element
        if num == 0.0:
            continue
        if den == 0.0:
            raise PreconditionError(f"component {j} is a nonzero constant")
        best = max(best, num / den)
    return best


# ---------------------------------------------------------------------------
# Cauchy study

@dataclass(frozen=True)
class CauchyReport:
    pair: tuple
    sup_dist_p: float
    int_dist_3p: float
    tau_n: float
    tau_m: float
    horizon: float

    def swapped(self) -> "CauchyReport":
        return CauchyReport((self.pair[1], self.pair[0]), self.sup_dist_p, self.int_dist_3p,
                            self.tau_m, self.tau_n, self.horizon)

    def to_dict(self) -> dict:
        inf_null = lambda x: None if math.isinf(x) else x  # noqa: E731
        return {
            "pair": list(self.pair),
            "sup_dist_p": self.sup_dist_p,
            "int_dist_3p": self.int_dist_3p,
            "tau_n": inf_null(self.tau_n),
            "tau_m": inf_null(self.tau_m),
            "horizon": self.horizon,
        }


@dataclass
class CauchyStudy:
    reports: list
    ledgers: list
    stopping: list
    k_levels: list


def _pair_report(pair, times, dp, d3p, tau_n, tau_m, horizon) -> CauchyReport:
    tau = min(tau_n, tau_m, horizon)
    keep = times <= tau + 1e-12 * max(1.0, horizon)
    sup = float(np.max(dp[keep])) if keep.any() else 0.0
    tk, gk = times[keep], d3p[keep]
    integ = float(np.sum(0.5 * np.diff(tk) * (gk[1:] + gk[:-1]))) if tk.size > 1 else 0.0
    return CauchyReport(tuple(pair), sup, integ, tau_n, tau_m, horizon)


def cauchy_study(cfg: SnseConfig, u0_raw: RealVectorField, n_list: Sequence[float],
                 seed: Optional[int] = None, stream: int = 0, M: Optional[float] = None,
                 K_bound: Optional[float] = None, k_mode: str = "identity",
                 k_levels: Optional[Sequence[float]] = None) -> CauchyStudy:
    """Run every level on one shared Wiener path, in lockstep, and report
    consecutive-pair distances up to the joint stopping time."""
    n_list = list(n_list)
    if any(b < a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be nondecreasing")
    seed = cfg.seed if seed is None else seed
    ks = list(k_levels) if k_levels is not None else k_schedule(n_list, k_mode, u0_raw)
    path = None
    if cfg.noise is not None:
        path = WienerPath(seed, cfg.dt, cfg.noise.K, stream)
    solvers, monitors = [], []
    for n, k in zip(n_list, ks):
        c = cfg.with_(k=k, seed=seed)
        u0 = prepare_initial_data(u0_raw, n, k)
        Kb = K_bound if K_bound is not None else max(1.0, lp_norm(u0, cfg.p))
        M0 = quarter_bound(u0, cfg.p, Kb)
        mon = StoppingMonitor(M if M is not None else M0, Kb, cfg.p, M0=M0)
        monitors.append(mon)
        solvers.append(SnseSolver(c, u0, path=path, monitor=mon))
    npairs = len(n_list) - 1
    dp = [[] for _ in range(npairs)]
    d3p = [[] for _ in range(npairs)]
    times = []
    grid, p = cfg.grid, cfg.p

    def measure():
        times.append(solvers[0].state.t)
        for i in range(npairs):
            diff = solvers[i + 1].state.u.data - solvers[i].state.u.data
            dp[i].append(kernels.power_sum(diff, p) * grid.volume_element)
            d3p[i].append((kernels.power_sum(diff, 3 * p) * grid.volume_element) ** (1 / 3))

    measure()
    while not solvers[0].done:
        for s in solvers:
            s.step()
        measure()
    times = np.asarray(times)
    records = [m.record() for m in monitors]
    reports = []
    for i in range(npairs):
        reports.append(_pair_report((n_list[i], n_list[i + 1]), times, np.asarray(dp[i]),
                                    np.asarray(d3p[i]), records[i].tau, records[i + 1].tau, cfg.T))
    return CauchyStudy(reports, [s.ledger for s in solvers], records, ks)


# ---------------------------------------------------------------------------
# uniqueness

@dataclass(frozen=True)
class UniquenessReport:
    perturbation: str
    max_deviation: float         # over the whole horizon
    max_deviation_to_tau: float  # up to the stopping time of the first run
    final_deviation: float
    deviations: tuple
    tau: float
    envelope: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "perturbation": self.perturbation,
            "max_deviation": self.max_deviation,
            "max_deviation_to_tau": self.max_deviation_to_tau,
            "final_deviation": self.final_deviation,
            "tau": None if math.isinf(self.tau) else self.tau,
            "envelope": self.envelope,
        }


def uniqueness_check(cfg: SnseConfig, u0: RealVectorField, seed: Optional[int] = None,
                     perturbation: Literal["none", "tiny"] = "none",
                     other_seed: Optional[int] = None, rel: float = 1e-10,
                     M: Optional[float] = None, K_bound: Optional[float] = None) -> UniquenessReport:
    """Advance two independently constructed solvers in lockstep and record
    ``||u1(t) - u2(t)||_p`` at every step.

    ``other_seed`` drives the second run with a different Wiener path
    (the sensitivity control). With ``perturbation='tiny'`` the second
    initial datum is ``u0 (1 + rel)``; ``envelope`` is then the largest
    growth factor of the deviation up to the stopping time.
    """
    if perturbation not in ("none", "tiny"):
        raise ValueError(f"unknown perturbation {perturbation!r}")
    seed = cfg.seed if seed is None else seed
    c1 = cfg.with_(seed=seed)
    c2 = cfg.with_(seed=seed if other_seed is None else other_seed)
    v0 = u0 if perturbation == "none" else u0.with_data(u0.data * (1.0 + rel))
    Kb = K_bound if K_bound is not None else max(1.0, lp_norm(u0, cfg.p))
    M0 = quarter_bound(u0, cfg.p, Kb)
    mon = StoppingMonitor(M if M is not None else M0, Kb, cfg.p, M0=M0)
    s1 = SnseSolver(c1, u0, monitor=mon)
    s2 = SnseSolver(c2, v0, record=False)
    times = [0.0]
    dev = [lp_norm_array(s1.state.u.data - s2.state.u.data, cfg.grid, cfg.p)]
    while not s1.done:
        s1.step()
        s2.step()
        times.append(s1.state.t)
        dev.append(lp_norm_array(s1.state.u.data - s2.state.u.data, cfg.grid, cfg.p))
    dev_arr = np.asarray(dev)
    to_tau = dev_arr[np.asarray(times) <= mon.tau]
    envelope = None
    if perturbation == "tiny" and dev[0] > 0:
        envelope = float(to_tau.max() / dev[0])
    return UniquenessReport(perturbation, float(dev_arr.max()), float(to_tau.max()),
                            float(dev[-1]), tuple(dev), mon.tau, envelope)
