"""Energy functionals along a trajectory and their CSV / binary serialization."""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from . import kernels
from .spectral import Grid, RealVectorField, fft_real

__all__ = [
    "LEDGER_COLUMNS",
    "EnergySample",
    "energy_sample",
    "grad_power_energy",
    "EnergyLedger",
    "emit_ledger",
    "read_ledger",
    "write_snapshot",
    "read_snapshot",
]

LEDGER_COLUMNS = ("t", "lp_p", "sup_lp_p", "grad_energy_cum", "l3p_cum", "phi_value", "stopped_flag")

# quadrature order for the |u_j|^{p/2} gradient in the energy functional
ENERGY_FD_ORDER = 6


def grad_power_energy(u: RealVectorField, p: float, order: int = ENERGY_FD_ORDER) -> float:
    """``sum_j int |grad |u_j|^{p/2}|^2 dx`` with a centered FD gradient."""
    grid = u.grid
    total = sum(kernels.fd_grad_power_energy(u.data[j], 0.5 * p, grid.spacing, order)
                for j in range(grid.d))
    return float(total * grid.volume_element)


@dataclass(frozen=True)
class EnergySample:
    lp_p: float        # ||u||_p^p
    grad_energy: float  # sum_j int |grad |u_j|^{p/2}|^2
    l3p_p: float       # ||u||_{3p}^p
    l2_sq: float       # ||u||_2^2
    grad_l2_sq: float  # ||grad u||_2^2


def energy_sample(u: RealVectorField, p: float, order: int = ENERGY_FD_ORDER,
                  hat: np.ndarray | None = None) -> EnergySample:
    """All per-time functionals of ``u``; ``hat`` may pass a ready half-spectrum transform."""
    grid = u.grid
    dV = grid.volume_element
    if hat is None:
        hat = fft_real(grid, u.data)
    # half-spectrum Parseval: interior columns of the last axis count twice
    w = np.full(hat.shape[-1], 2.0)
    w[0] = w[-1] = 1.0
    power = (hat.real ** 2 + hat.imag ** 2).sum(axis=0) * w
    k2 = (2 * math.pi) ** 2 * sum(x * x for x in grid.derivative_wavevectors(half=True))
    return EnergySample(
        float(kernels.power_sum(u.data, p) * dV),
        grad_power_energy(u, p, order),
        float((kernels.power_sum(u.data, 3 * p) * dV) ** (1.0 / 3.0)),
        float(power.sum() / grid.volume),
        float((power * k2).sum() / grid.volume),
    )


@dataclass
class EnergyLedger:
    """Per-step energy functionals of one trajectory.

    Cumulative columns use the trapezoid rule in time. ``l2_sq`` and
    ``grad_l2_cum`` are kept in memory for the L^2 balance but not emitted.
    """

    p: float
    t: list = field(default_factory=list)
    lp_p: list = field(default_factory=list)
    sup_lp_p: list = field(default_factory=list)
    grad_energy_cum: list = field(default_factory=list)
    l3p_cum: list = field(default_factory=list)
    phi_value: list = field(default_factory=list)
    stopped_flag: list = field(default_factory=list)
    l2_sq: list = field(default_factory=list)
    grad_l2_cum: list = field(default_factory=list)
    _last: EnergySample | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.t)

    def record(self, t: float, s: EnergySample, phi: float = 1.0, stopped: bool = False) -> None:
        if self.t:
            dt = t - self.t[-1]
            if dt < 0:
                raise ValueError("ledger times must be nondecreasing")
            prev = self._last
            grad = self.grad_energy_cum[-1] + 0.5 * dt * (prev.grad_energy + s.grad_energy)
            l3p = self.l3p_cum[-1] + 0.5 * dt * (prev.l3p_p + s.l3p_p)
            gl2 = self.grad_l2_cum[-1] + 0.5 * dt * (prev.grad_l2_sq + s.grad_l2_sq)
            sup = max(self.sup_lp_p[-1], s.lp_p)
        else:
            grad = l3p = gl2 = 0.0
            sup = s.lp_p
        self.t.append(float(t))
        self.lp_p.append(s.lp_p)
        self.sup_lp_p.append(sup)
        self.grad_energy_cum.append(grad)
        self.l3p_cum.append(l3p)
        self.phi_value.append(float(phi))
        self.stopped_flag.append(int(bool(stopped)))
        self.l2_sq.append(s.l2_sq)
        self.grad_l2_cum.append(gl2)
        self._last = s

    def stopping_functional(self) -> np.ndarray:
        """``sup_{[0,t]} ||u||_p^p + int_0^t ||u||_{3p}^p ds`` per row."""
        return np.asarray(self.sup_lp_p) + np.asarray(self.l3p_cum)

    def rows(self):
        return zip(*(getattr(self, c) for c in LEDGER_COLUMNS))

    def column(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=np.float64)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x


def emit_ledger(ledger: EnergyLedger, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(LEDGER_COLUMNS) + "\n")
        for row in ledger.rows():
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_ledger(path: Union[str, Path], p: float = math.nan) -> EnergyLedger:
    ledger = EnergyLedger(p)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != LEDGER_COLUMNS:
            raise ValueError(f"unexpected ledger header {header}")
        for row in reader:
            for name, val in zip(LEDGER_COLUMNS, row):
                getattr(ledger, name).append(int(val) if name == "stopped_flag" else float(val))
    return ledger


# ---------------------------------------------------------------------------
# snapshots: header then little-endian float64 samples, component-major

_MAGIC = b"SNSF"
_VERSION = 1


def write_snapshot(path: Union[str, Path], u: RealVectorField, p: float, t: float) -> Path:
    grid = u.grid
    dims = list(grid.dims) + [1] * (3 - grid.d)
    ext = list(grid.extent) + [0.0] * (3 - grid.d)
    header = struct.pack("<4sII3I3ddd", _MAGIC, _VERSION, grid.d, *dims, *ext, float(p), float(t))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(u.data, dtype="<f8").tobytes())
    return path


def read_snapshot(path: Union[str, Path]) -> tuple[RealVectorField, float, float]:
    fmt = "<4sII3I3ddd"
    size = struct.calcsize(fmt)
    raw = Path(path).read_bytes()
    magic, version, d, n1, n2, n3, L1, L2, L3, p, t = struct.unpack(fmt, raw[:size])
    if magic != _MAGIC or version != _VERSION:
        raise ValueError("not a snapshot file")
    dims = (n1, n2, n3)[:d]
    grid = Grid(dims, (L1, L2, L3)[:d])
    data = np.frombuffer(raw[size:], dtype="<f8").reshape((d,) + dims)
    return RealVectorField(grid, data.astype(np.float64)), p, t
