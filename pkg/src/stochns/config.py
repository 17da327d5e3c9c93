"""Experiment configuration: a YAML key tree validated against a strict schema."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .fields import localized_field, random_smooth_field, taylor_green
from .heat import step_count
from .noise import NoiseModel
from .snse import SnseConfig
from .spectral import Grid, RealVectorField

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "config_hash", "COMMANDS"]

COMMANDS = ("verify-operators", "heat-run", "snse-run", "converge-study",
            "uniqueness-check", "noise-audit")


class ConfigError(ValueError):
    """Validation failure; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSection(_Strict):
    dims: List[int] = Field(default_factory=lambda: [32, 32, 32])
    L: float = 8 * math.pi

    @field_validator("dims")
    @classmethod
    def _dims(cls, v):
        if len(v) not in (2, 3):
            raise ValueError("grid must have 2 or 3 axes")
        if any(n < 4 or n % 2 for n in v):
            raise ValueError("lattice sizes must be even and >= 4")
        return v

    @field_validator("L")
    @classmethod
    def _L(cls, v):
        if not v > 0:
            raise ValueError("box length must be positive")
        return v

    def build(self) -> Grid:
        return Grid(self.dims, self.L)


class NoiseSection(_Strict):
    kind: Literal["linear_mollified", "three_halves_mollified", "none"] = "three_halves_mollified"
    K: int = Field(16, ge=1)
    weights: Union[Literal["inverse_k"], List[float]] = "inverse_k"
    eps: float = Field(math.pi, gt=0)

    @model_validator(mode="after")
    def _weights(self):
        if isinstance(self.weights, list):
            if len(self.weights) != self.K:
                raise ValueError(f"weights: must list exactly K={self.K} values")
            if any(w <= 0 for w in self.weights):
                raise ValueError("weights: must be positive")
            if any(b > a for a, b in zip(self.weights, self.weights[1:])):
                raise ValueError("weights: must be nonincreasing")
        return self

    def build(self, seed: int) -> Optional[NoiseModel]:
        if self.kind == "none":
            return None
        return NoiseModel(self.kind, self.K, self.weights, self.eps, seed)


class InitialSection(_Strict):
    kind: Literal["localized", "random_smooth", "taylor_green", "zero"] = "localized"
    amplitude: float = Field(1.0, ge=0)
    modes: float = Field(3.0, gt=0)
    width: float = Field(3.0, gt=0)
    seed: int = 7

    def build(self, grid: Grid) -> RealVectorField:
        if self.kind == "zero":
            return RealVectorField.zeros(grid)
        if self.kind == "localized":
            return localized_field(grid, self.seed, self.amplitude, self.modes, self.width)
        if self.kind == "taylor_green":
            return taylor_green(grid, self.amplitude)
        return random_smooth_field(grid, self.seed, self.amplitude, self.modes)


class AuditSection(_Strict):
    samples: int = Field(16, ge=2)
    amplitudes: List[float] = Field(default_factory=lambda: [1.0, 10.0, 100.0])
    eps_growth: float = Field(0.05, gt=0)


class VerifySection(_Strict):
    fields: int = Field(20, ge=1)
    dims: List[int] = Field(default_factory=lambda: [16, 16, 16])
    # small box so the projector kernels are resolved by the lattice
    L: float = Field(1.0, gt=0)
    direct_dims: List[int] = Field(default_factory=lambda: [8, 8, 8])
    direct_L: float = Field(1.0, gt=0)


class ExperimentConfig(_Strict):
    command: Literal["verify-operators", "heat-run", "snse-run", "converge-study",
                     "uniqueness-check", "noise-audit"]
    grid: GridSection = Field(default_factory=GridSection)
    p: float = 4.0
    k: float = Field(8.0, ge=1)
    k_schedule: Literal["fixed", "identity", "l2_offset"] = "identity"
    N: float = Field(5.0, gt=0)
    M: Optional[float] = Field(None, ge=1)
    K: Optional[float] = Field(None, ge=1)
    noise: NoiseSection = Field(default_factory=NoiseSection)
    initial: InitialSection = Field(default_factory=InitialSection)
    dt: float = Field(0.01, gt=0)
    T: float = Field(2.0, gt=0)
    n_level: float = Field(4.0, ge=1)
    n_list: List[float] = Field(default_factory=lambda: [2.0, 4.0, 8.0, 16.0])
    dealias: bool = False
    perturbation: Literal["none", "tiny"] = "tiny"
    ensemble_size: int = Field(1, ge=1)
    master_seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)
    snapshot_stride: int = Field(0, ge=0)
    output_dir: str = "output"
    audit: AuditSection = Field(default_factory=AuditSection)
    verify: VerifySection = Field(default_factory=VerifySection)

    @field_validator("p")
    @classmethod
    def _p(cls, v):
        if not v > 2:
            raise ValueError("p must exceed 2")
        return v

    @field_validator("n_list")
    @classmethod
    def _n_list(cls, v):
        if len(v) < 2:
            raise ValueError("need at least two levels")
        if any(n < 1 for n in v) or any(b < a for a, b in zip(v, v[1:])):
            raise ValueError("levels must be >= 1 and nondecreasing")
        return v

    @model_validator(mode="after")
    def _time(self):
        try:
            step_count(self.T, self.dt)
        except ValueError as exc:
            raise ValueError(f"dt: {exc}") from None
        if self.noise.kind != "none" and not self.noise.eps < self.grid.L / 2:
            raise ValueError(f"noise.eps: must be below L/2 = {self.grid.L / 2:g}")
        return self

    # -- builders --------------------------------------------------------
    def snse_config(self, seed: Optional[int] = None, k: Optional[float] = None) -> SnseConfig:
        seed = self.master_seed if seed is None else seed
        return SnseConfig(self.grid.build(), self.p, self.k if k is None else k, self.N,
                          self.noise.build(seed), self.dt, self.T, seed, self.dealias)

    def semantic_dict(self) -> dict:
        d = self.model_dump(mode="json")
        d.pop("output_dir")
        d.pop("workers")
        return d


def config_hash(cfg: ExperimentConfig) -> str:
    """sha256 of the canonical JSON of every key that affects results."""
    blob = json.dumps(cfg.semantic_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _describe(err: dict) -> tuple[str, str]:
    """Dotted key and message for the first validation error."""
    loc = [str(x) for x in err.get("loc", ()) if not isinstance(x, int)]
    msg = err.get("msg", "invalid value").removeprefix("Value error, ")
    # model-level validators name the key (relative to their section) first
    head, sep, rest = msg.partition(":")
    if sep and head and " " not in head:
        loc.append(head)
        msg = rest.strip()
    return ".".join(loc) or "<root>", msg


def load_config(path: Union[str, Path], command: Optional[str] = None) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    if command is not None:
        raw = dict(raw, command=command)
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(*_describe(exc.errors()[0])) from None
