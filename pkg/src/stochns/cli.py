"""Command-line experiment runner.

    stochns CONFIG.yaml [--command CMD]

Exit status: 0 on success, 1 on a runtime failure or a failed check,
2 on an invalid configuration (the message names the offending key).
Set ``STOCHNS_OUTPUT_DIR`` to override ``output_dir``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .config import COMMANDS, ConfigError, ExperimentConfig, config_hash, load_config
from .errors import PreconditionError, SolverError

OUTPUT_ENV = "STOCHNS_OUTPUT_DIR"


# ---------------------------------------------------------------------------
# helpers

def _dump_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _fan_out(fn: Callable, cfg: ExperimentConfig, out: Path):
    """Run ``fn(cfg_dict, out, index)`` for every ensemble member; results
    come back sorted by member index whatever the completion order."""
    args = [(cfg.model_dump(mode="json"), str(out), i) for i in range(cfg.ensemble_size)]
    if cfg.workers == 1 or cfg.ensemble_size == 1:
        results = [fn(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(fn, *zip(*args)))
    return sorted(results, key=lambda r: r["index"])


def _cfg(d: dict) -> ExperimentConfig:
    return ExperimentConfig.model_validate(d)


# ---------------------------------------------------------------------------
# commands; each returns (artifact paths, passed)

def cmd_verify(cfg: ExperimentConfig, out: Path):
    from .spectral import Grid
    from .verify import run_all

    v = cfg.verify
    results = run_all(Grid(v.dims, v.L), Grid(v.direct_dims, v.direct_L), v.fields, cfg.p)
    ok = all(r.passed for r in results)
    path = _dump_json(out / "verify.json", {
        "passed": ok,
        "suites": [r.to_dict() for r in results],
    })
    return [path], ok


def _heat_member(cfg_dict: dict, out: str, index: int) -> dict:
    from .heat import heat_solve
    from .ledger import emit_ledger
    from .noise import WienerPath, sigma_apply
    from .spectral import hs_lp_norm

    cfg = _cfg(cfg_dict)
    grid = cfg.grid.build()
    model = cfg.noise.build(cfg.master_seed)
    u0 = cfg.initial.build(grid)
    g_int = [0.0]

    def g(t, u):
        if model is None:
            return None
        G = sigma_apply(model, u)
        g_int[0] += hs_lp_norm(G, cfg.p) ** cfg.p * cfg.dt
        return G

    path = WienerPath(cfg.master_seed, cfg.dt, cfg.noise.K, stream=index)
    _, ledger = heat_solve(u0, None, g if model is not None else None, cfg.T, cfg.dt,
                           p=cfg.p, path=path, keep_every=10 ** 9)
    f = emit_ledger(ledger, Path(out) / "ledgers" / f"heat_{index:04d}.csv")
    lhs = ledger.sup_lp_p[-1] + ledger.grad_energy_cum[-1]
    return {"index": index, "ledger": str(f), "lhs": lhs, "u0_lp_p": ledger.lp_p[0],
            "g_int": g_int[0]}


def cmd_heat(cfg: ExperimentConfig, out: Path):
    res = _fan_out(_heat_member, cfg, out)
    lhs = float(np.mean([r["lhs"] for r in res]))
    rhs = float(np.mean([r["u0_lp_p"] for r in res]) + np.mean([r["g_int"] for r in res]))
    const = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    summary = _dump_json(out / "heat_summary.json", {
        "members": len(res),
        "mean_sup_lp_p_plus_grad_energy": lhs,
        "mean_data_plus_noise": rhs,
        "empirical_constant": _finite_or_none(const),
        "finite": math.isfinite(const),
    })
    return [Path(r["ledger"]) for r in res] + [summary], math.isfinite(const)


def _snse_member(cfg_dict: dict, out: str, index: int) -> dict:
    from .ledger import emit_ledger, write_snapshot
    from .snse import snse_solve

    cfg = _cfg(cfg_dict)
    sc = cfg.snse_config()
    u0_raw = cfg.initial.build(sc.grid)
    res = snse_solve(sc, u0_raw, cfg.n_level, M=cfg.M, K_bound=cfg.K, stream=index,
                     keep_every=cfg.snapshot_stride)
    files = [emit_ledger(res.ledger, Path(out) / "ledgers" / f"snse_{index:04d}.csv")]
    for st in res.trajectory:
        snap = Path(out) / "snapshots" / f"snse_{index:04d}_{st.step_index:06d}.bin"
        snap.parent.mkdir(parents=True, exist_ok=True)
        files.append(write_snapshot(snap, st.u, cfg.p, st.t))
    return {"index": index, "files": [str(f) for f in files],
            "stopping": res.stopping.to_dict()}


def cmd_snse(cfg: ExperimentConfig, out: Path):
    (out / "ledgers").mkdir(parents=True, exist_ok=True)
    res = _fan_out(_snse_member, cfg, out)
    stop = _dump_json(out / "stopping.json", [dict(r["stopping"], index=r["index"]) for r in res])
    files = [Path(f) for r in res for f in r["files"]]
    return files + [stop], True


def _k_levels(cfg: ExperimentConfig, u0_raw):
    from .snse import k_schedule

    if cfg.k_schedule == "fixed":
        return [cfg.k] * len(cfg.n_list)
    return k_schedule(cfg.n_list, cfg.k_schedule, u0_raw)


def _converge_member(cfg_dict: dict, out: str, index: int) -> dict:
    from .ledger import emit_ledger
    from .monitors import cauchy_study

    cfg = _cfg(cfg_dict)
    sc = cfg.snse_config()
    u0_raw = cfg.initial.build(sc.grid)
    study = cauchy_study(sc, u0_raw, cfg.n_list, stream=index, M=cfg.M, K_bound=cfg.K,
                         k_levels=_k_levels(cfg, u0_raw))
    files = []
    for n, ledger in zip(cfg.n_list, study.ledgers):
        files.append(str(emit_ledger(
            ledger, Path(out) / "ledgers" / f"converge_{index:04d}_n{n:g}.csv")))
    return {"index": index, "files": files, "reports": [r.to_dict() for r in study.reports],
            "k_levels": study.k_levels, "stopping": [s.to_dict() for s in study.stopping]}


def cmd_converge(cfg: ExperimentConfig, out: Path):
    (out / "ledgers").mkdir(parents=True, exist_ok=True)
    res = _fan_out(_converge_member, cfg, out)
    sup = np.array([[rep["sup_dist_p"] for rep in r["reports"]] for r in res])
    mean = sup.mean(axis=0)
    decreasing = bool(np.all(np.diff(mean) < 0))
    report = _dump_json(out / "cauchy.json", {
        "n_list": cfg.n_list,
        "members": [{k: r[k] for k in ("index", "reports", "k_levels", "stopping")} for r in res],
        "mean_sup_dist_p": mean.tolist(),
        "mean_int_dist_3p": np.array([[rep["int_dist_3p"] for rep in r["reports"]]
                                      for r in res]).mean(axis=0).tolist(),
        "strictly_decreasing": decreasing,
    })
    return [Path(f) for r in res for f in r["files"]] + [report], True


def cmd_uniqueness(cfg: ExperimentConfig, out: Path):
    from .monitors import uniqueness_check
    from .snse import prepare_initial_data

    sc = cfg.snse_config()
    u0 = prepare_initial_data(cfg.initial.build(sc.grid), cfg.n_level, sc.k)
    same = uniqueness_check(sc, u0, perturbation="none", M=cfg.M, K_bound=cfg.K)
    reports = {"identical": same.to_dict()}
    if cfg.perturbation == "tiny":
        reports["perturbed"] = uniqueness_check(sc, u0, perturbation="tiny",
                                                M=cfg.M, K_bound=cfg.K).to_dict()
    if sc.noise is not None:
        reports["decoupled_control"] = uniqueness_check(
            sc, u0, other_seed=cfg.master_seed + 1, M=cfg.M, K_bound=cfg.K).to_dict()
    ok = same.max_deviation <= 1e-12
    path = _dump_json(out / "uniqueness.json", dict(reports, passed=ok))
    return [path], ok


def cmd_audit(cfg: ExperimentConfig, out: Path):
    from .fields import random_smooth_field
    from .noise import NoiseModel, noise_audit

    grid = cfg.grid.build()
    kind = cfg.noise.kind if cfg.noise.kind != "none" else "linear_mollified"
    model = NoiseModel(kind, cfg.noise.K, cfg.noise.weights, cfg.noise.eps, cfg.master_seed)
    base = [random_smooth_field(grid, cfg.master_seed * 7919 + j, 1.0, cfg.initial.modes)
            for j in range(cfg.audit.samples)]
    per_amp, combined = [], None
    for a in cfg.audit.amplitudes:
        samples = [f * a for f in base]
        per_amp.append(dict(noise_audit(model, samples, cfg.p, cfg.audit.eps_growth).to_dict(),
                            amplitude=a))
        combined = noise_audit(model, samples, cfg.p, cfg.audit.eps_growth, report=combined)
    path = _dump_json(out / "audit.json", {"per_amplitude": per_amp,
                                           "combined": combined.to_dict()})
    return [path], not combined.nonfinite


HANDLERS = {
    "verify-operators": cmd_verify,
    "heat-run": cmd_heat,
    "snse-run": cmd_snse,
    "converge-study": cmd_converge,
    "uniqueness-check": cmd_uniqueness,
    "noise-audit": cmd_audit,
}


def write_manifest(cfg: ExperimentConfig, out: Path, artifacts, passed: bool) -> Path:
    rel = sorted({str(Path(a).resolve().relative_to(out.resolve())) for a in artifacts})
    return _dump_json(out / "manifest.json", {
        "command": cfg.command,
        "config_hash": config_hash(cfg),
        "master_seed": cfg.master_seed,
        "passed": passed,
        "artifacts": {name: _sha256(out / name) for name in rel},
    })


def run(config_path, command: Optional[str] = None, output_dir: Optional[str] = None) -> int:
    try:
        cfg = load_config(config_path, command)
    except FileNotFoundError:
        print(f"config error: <file>: {config_path} not found", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(output_dir or os.environ.get(OUTPUT_ENV) or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        artifacts, passed = HANDLERS[cfg.command](cfg, out)
    except SolverError as exc:
        print(f"runtime failure at step {exc.step}: {exc}", file=sys.stderr)
        return 1
    except PreconditionError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1
    write_manifest(cfg, out, artifacts, passed)
    print(f"{cfg.command}: {'ok' if passed else 'FAILED'} ({len(artifacts)} artifacts in {out})")
    return 0 if passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="stochns", description=__doc__.splitlines()[0])
    parser.add_argument("config", help="YAML experiment file")
    parser.add_argument("--command", choices=COMMANDS, help="override the command in the file")
    args = parser.parse_args(argv)
    return run(args.config, args.command)


if __name__ == "__main__":
    sys.exit(main())
