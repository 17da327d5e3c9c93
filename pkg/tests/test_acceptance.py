"""Acceptance criteria 1-14.

Each test records one pass/fail line (shown in the terminal summary);
``python tests/test_acceptance.py`` runs them all and prints the lines.
"""

import filecmp
import json
import math
import os
import sys

import numpy as np
import pytest
import yaml

sys.path.insert(0, os.path.dirname(__file__))

from conftest import ACCEPTANCE, band_limited_divfree, low_mode_field  # noqa: E402

from stochns import cli  # noqa: E402
from stochns.fields import localized_field, random_smooth_field  # noqa: E402
from stochns.heat import dissipation_identity_check, heat_solve  # noqa: E402
from stochns.monitors import stopping_monitor, uniqueness_check  # noqa: E402
from stochns.noise import NoiseModel, WienerPath  # noqa: E402
from stochns.operators import (  # noqa: E402
    gaussian_projector,
    gaussian_projector_direct,
    leray_project,
    lipschitz_quadrature_constant,
)
from stochns.snse import (  # noqa: E402
    SnseConfig,
    SnseSolver,
    convective_term,
    geometric_fit_r2,
    picard_horizon_sweep,
    prepare_initial_data,
    snse_solve,
)
from stochns.spectral import (  # noqa: E402
    Grid,
    LtwoSequenceField,
    RealVectorField,
    fft_real,
    gradient_lp_norm,
    lp_norm,
    spectral_divergence,
    spectral_gradient,
)

L_DEFAULT = 8 * math.pi
P = 4.0


def record(num, name, ok, detail):
    ACCEPTANCE[num] = (bool(ok), name, detail)
    print(f"[{'PASS' if ok else 'FAIL'}] {num:2d} {name}: {detail}")
    assert ok, detail


def three_halves(eps=math.pi, seed=0):
    return NoiseModel("three_halves_mollified", 16, "inverse_k", eps, seed)


def white_fields(grid, count, seed):
    rng = np.random.default_rng(seed)
    return [RealVectorField(grid, rng.standard_normal((3,) + grid.dims)) for _ in range(count)]


# ---------------------------------------------------------------------------

def test_01_projector_contraction():
    worst = 0.0
    for grid in (Grid([16] * 3, 1.0), Grid([32] * 3, L_DEFAULT)):
        for f in white_fields(grid, 100, 101):
            for n in (1.0, 2.0, 8.0):
                Pf = gaussian_projector(f, n)
                for q in (2.0, 4.0, P):
                    worst = max(worst, lp_norm(Pf, q) / lp_norm(f, q))
    record(1, "projector contraction", worst <= 1 + 1e-10,
           f"max ||P f||_q / ||f||_q = {worst:.12f} (bound 1 + 1e-10)")


def _separable_oracle(f: RealVectorField, n: float) -> np.ndarray:
    # 1-D circulant matrices built from the periodized Gaussian, applied axis by axis
    grid = f.grid
    out = f.data
    for a in range(grid.d):
        N, L = grid.dims[a], grid.extent[a]
        h = L / N
        x = np.arange(N) * h
        x = np.where(x >= L / 2, x - L, x)
        js = np.arange(-20, 21)
        k1 = np.exp(-(math.pi * n * (x[:, None] - js * L)) ** 2).sum(axis=1)
        k1 /= k1.sum()
        idx = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
        C = k1[idx]
        out = np.moveaxis(np.tensordot(C, np.moveaxis(out, a + 1, 0), axes=1), 0, a + 1)
    return out


def test_02_fft_vs_direct():
    worst_direct = worst_oracle = 0.0
    for dims in (8, 16):
        grid = Grid([dims] * 3, 1.0)
        for f in white_fields(grid, 2, 202 + dims):
            for n in (1.0, 2.0, 8.0):
                a = gaussian_projector(f, n).data
                b = gaussian_projector_direct(f, n).data
                c = _separable_oracle(f, n)
                worst_direct = max(worst_direct, np.max(np.abs(a - b)) / np.max(np.abs(b)))
                worst_oracle = max(worst_oracle, np.max(np.abs(a - c)) / np.max(np.abs(c)))
    ok = worst_direct <= 1e-10 and worst_oracle <= 1e-10
    record(2, "FFT vs direct convolution", ok,
           f"max rel err vs direct {worst_direct:.2e}, vs separable oracle {worst_oracle:.2e}")


def test_03_lipschitz_in_inverse_level():
    C = lipschitz_quadrature_constant(3)
    closed = 2 / math.pi ** 1.5
    grid = Grid([32] * 3, 1.0)
    worst = 0.0
    for s in range(20):
        f = random_smooth_field(grid, 300 + s, 1.0, 3.0)
        for n, m in ((2, 4), (4, 8), (8, 16)):
            Pn, Pm = gaussian_projector(f, n), gaussian_projector(f, m)
            for q in (2.0, P):
                lhs = lp_norm(Pn - Pm, q)
                rhs = C * abs(1 / n - 1 / m) * gradient_lp_norm(f, q)
                worst = max(worst, lhs / rhs)
    ok = abs(C - closed) <= 1e-12 * closed and worst <= 1.0
    record(3, "Lipschitz in 1/n", ok,
           f"C* = {C:.15f} (closed form {closed:.15f}); max lhs/rhs = {worst:.3f}")


def test_04_leray():
    grid = Grid([32] * 3, 1.0)
    idem = div = kill = 0.0
    for f in white_fields(grid, 20, 404):
        Pf = leray_project(f)
        n2 = lp_norm(f, 2)
        idem = max(idem, lp_norm(leray_project(Pf) - Pf, 2) / n2)
        div = max(div, spectral_divergence(Pf) / n2)
        g = RealVectorField(grid, spectral_gradient(f.data[0], grid))
        kill = max(kill, lp_norm(leray_project(g), 2) / lp_norm(g, 2))
    ok = idem <= 1e-12 and kill <= 1e-12 and div <= 1e-10
    record(4, "Leray projection", ok,
           f"idempotence {idem:.1e}, gradient annihilation {kill:.1e}, divergence {div:.1e}")


def test_05_heat_semigroup():
    grid = Grid([16] * 3, 2 * math.pi)
    dt, steps = 0.01, 50
    u0 = white_fields(grid, 1, 505)[0]
    traj, _ = heat_solve(u0, None, None, steps * dt, dt, keep_every=steps)
    m = [np.fft.fftfreq(N, 1.0 / N) for N in grid.dims]
    m[-1] = np.fft.rfftfreq(grid.dims[-1], 1.0 / grid.dims[-1])
    mm = np.meshgrid(*m, indexing="ij")
    xi2 = sum((mi / L) ** 2 for mi, L in zip(mm, grid.extent))
    expected = np.fft.rfftn(u0.data, axes=(1, 2, 3)) * np.exp(-(2 * math.pi) ** 2 * xi2 * dt * steps)
    got = np.fft.rfftn(traj[-1].u.data, axes=(1, 2, 3))
    err = float(np.max(np.abs(got - expected)) / np.max(np.abs(expected)))
    record(5, "heat semigroup exactness", err <= 1e-12, f"max per-mode error {err:.1e} after {steps} steps")


def test_06_ito_isometry():
    grid = Grid([8] * 3, 1.0)
    x = grid.coords[0]
    mode = np.zeros((1, 3) + grid.dims)
    mode[0, 1] = np.cos(2 * math.pi * x) + 0 * grid.coords[1]
    G = LtwoSequenceField(grid, mode)
    dt, steps, paths = 1e-4, 200, 400
    u0 = RealVectorField.zeros(grid)
    samples = []
    for i in range(paths):
        traj, _ = heat_solve(u0, None, lambda t, u: G, steps * dt, dt, path=WienerPath(606, dt, 1, i),
                             keep_every=steps)
        samples.append(fft_real(grid, traj[-1].u.data)[1, 1, 0, 0].real)
    samples = np.asarray(samples)
    ghat = grid.volume / 2
    lam = (2 * math.pi) ** 2
    T = steps * dt
    exact = ghat ** 2 * (1 - math.exp(-2 * lam * T)) / (2 * lam)
    var = float(np.var(samples, ddof=1))
    se = var * math.sqrt(2 / (paths - 1))
    z = abs(var - exact) / se
    record(6, "Ito isometry (OU variance)", z <= 3,
           f"sample var {var:.5e}, closed form {exact:.5e}, |z| = {z:.2f} (bound 3)")


def test_07_dissipation_identity():
    rels = {}
    for p in (P, P + 2):
        rels[p] = [dissipation_identity_check(low_mode_field(Grid([n] * 3, 2 * math.pi)), p)[2]
                   for n in (16, 32, 64)]
    ok = all(r[1] <= 1e-3 and r[0] > r[1] > r[2] for r in rels.values())
    detail = "; ".join(f"p={p:g}: " + ", ".join(f"{e:.1e}" for e in r) for p, r in rels.items())
    record(7, "dissipation identity", ok, detail + " (16^3, 32^3, 64^3)")


def test_08_convective_cancellation():
    grid = Grid([32] * 3, 2 * math.pi)
    dV = grid.volume_element
    worst = 0.0
    for s in range(50):
        w = band_limited_divfree(grid, 800 + s, 5)
        # advective form from independent spectral derivatives
        m = [np.fft.fftfreq(N, 1.0 / N) * (2 * math.pi / L) for N, L in zip(grid.dims, grid.extent)]
        K = np.meshgrid(*m, indexing="ij")
        what = np.fft.fftn(w.data, axes=(1, 2, 3))
        adv = np.zeros_like(w.data)
        for j in range(3):
            for i in range(3):
                adv[j] += w.data[i] * np.fft.ifftn(1j * K[i] * what[j]).real
        terms = [leray_project(RealVectorField(grid, adv)), convective_term(w), convective_term(w, k=8.0)]
        grad = math.sqrt(sum(lp_norm(RealVectorField(grid, spectral_gradient(w.data[j], grid)), 2) ** 2
                             for j in range(3)))
        scale = lp_norm(w, 2) * grad * np.max(np.abs(w.data))
        for t in terms:
            worst = max(worst, abs(float(np.sum(t.data * w.data)) * dV) / scale)
    record(8, "convective cancellation", worst <= 1e-10,
           f"max |int B(w).w| / (|w|_2 |grad w|_2 |w|_inf) = {worst:.1e} over 50 samples")


HORIZONS = [0.025, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2]


def test_09_picard_contraction():
    grid = Grid([16] * 3, L_DEFAULT)
    cfg = SnseConfig(grid, P, 4.0, 5.0, three_halves())
    u0 = random_smooth_field(grid, 909, 1.0, 3.0)
    seeds = list(range(10))
    sweep = picard_horizon_sweep(cfg, u0, HORIZONS, seeds)
    t_star = sweep.t_star
    # t* must be interior: some longer horizon has to fail
    ok = t_star is not None and False in sweep.passed
    worst_ratio, worst_r2 = 0.0, 1.0
    if ok:
        for s in seeds:
            D = sweep.distances[(t_star, s)]
            worst_ratio = max(worst_ratio, float(np.max(D[1:] / D[:-1])))
            worst_r2 = min(worst_r2, geometric_fit_r2(D))
        ok = worst_ratio < 1 and worst_r2 >= 0.95
    record(9, "Picard contraction", ok,
           f"t* = {t_star} (first failing horizon {sweep.horizons[-1]}); at T = t*: max D_(m+1)/D_m = {worst_ratio:.3f}, min R^2 = {worst_r2:.3f}")


def test_10_uniform_in_k():
    # small box so that P_8 and P_32 actually differ on the lattice
    grid = Grid([16] * 3, 1.0)
    bounds = {}
    for k in (8.0, 32.0):
        vals = []
        for s in range(10):
            cfg = SnseConfig(grid, P, k, 5.0, three_halves(eps=0.125, seed=s), dt=5e-4, T=0.1, seed=s)
            u0 = leray_project(random_smooth_field(grid, 1000 + s, 5.0, 3.0))
            led = SnseSolver(cfg, u0).run().ledger
            vals.append(max(led.l2_sq) + 2 * led.grad_l2_cum[-1])
        bounds[k] = float(np.mean(vals))
    change = abs(bounds[32.0] - bounds[8.0]) / bounds[8.0]
    record(10, "uniform-in-k L2 envelope", change <= 0.2,
           f"mean bound k=8: {bounds[8.0]:.4f}, k=32: {bounds[32.0]:.4f}, change {100 * change:.2f}%")


def _write_cfg(path, d):
    path.write_text(yaml.safe_dump(d))
    return path


def test_11_cauchy_decay(tmp_path):
    cfg = _write_cfg(tmp_path / "c.yaml", {
        "command": "converge-study",
        "grid": {"dims": [16, 16, 16], "L": L_DEFAULT},
        "p": P, "noise": {"kind": "three_halves_mollified", "K": 16, "eps": math.pi},
        "initial": {"kind": "localized", "amplitude": 2.0, "modes": 3, "width": 3.0, "seed": 7},
        "n_list": [2, 4, 8, 16], "dt": 0.01, "T": 1.0, "ensemble_size": 20,
    })
    code = cli.run(cfg, output_dir=str(tmp_path / "out"))
    report = json.loads((tmp_path / "out" / "cauchy.json").read_text())
    mean = report["mean_sup_dist_p"]
    ok = code == 0 and report["strictly_decreasing"] and all(b < a for a, b in zip(mean, mean[1:]))
    record(11, "Cauchy decay", ok,
           "mean sup_dist_p over 20 seeds: " + ", ".join(f"{x:.2e}" for x in mean))


def test_12_coupled_runs():
    grid = Grid([32] * 3, L_DEFAULT)
    cfg = SnseConfig(grid, P, 8.0, 5.0, three_halves(), dt=0.01, T=2.0, seed=12)
    u0 = prepare_initial_data(localized_field(grid, 12, 2.0), 4.0, 8.0)
    rep = uniqueness_check(cfg, u0)
    record(12, "pathwise uniqueness surrogate", rep.max_deviation <= 1e-12,
           f"max sup-L^p deviation over {len(rep.deviations) - 1} steps = {rep.max_deviation:.1e}")


def test_13_stopping_time():
    grid = Grid([16] * 3, L_DEFAULT)
    taus_pos, monotone, triggered = True, True, 0
    for s in range(10):
        cfg = SnseConfig(grid, P, 8.0, 5.0, three_halves(), dt=0.01, T=1.0, seed=s)
        res = snse_solve(cfg, localized_field(grid, 1300 + s, 3.0), 4.0, K_bound=1.0)
        rec = res.stopping
        taus_pos &= rec.quarter_bound_ok and rec.tau > 0
        M0 = rec.M0
        taus = [stopping_monitor(res.ledger, M0 * f, 1.0, P, M0).tau
                for f in (1.0, 1.05, 1.1, 1.25, 1.5, 2.0, 4.0, 16.0)]
        triggered += sum(math.isfinite(t) for t in taus)
        monotone &= all(b >= a for a, b in zip(taus, taus[1:]))
    ok = taus_pos and monotone and triggered > 0
    record(13, "stopping-time positivity and monotonicity", ok,
           f"tau > 0 on 10 runs: {taus_pos}; nondecreasing in M: {monotone}; "
           f"{triggered} of 80 (run, M) pairs triggered")


DETERMINISM_CONFIGS = {
    "verify-operators": {"verify": {"fields": 3, "dims": [8, 8, 8], "L": 1.0}},
    "heat-run": {"grid": {"dims": [8, 8, 8], "L": L_DEFAULT}, "dt": 0.01, "T": 0.1,
                 "ensemble_size": 2},
    "snse-run": {"grid": {"dims": [16, 16, 16], "L": L_DEFAULT}, "dt": 0.01, "T": 0.2,
                 "snapshot_stride": 10, "ensemble_size": 2},
    "converge-study": {"grid": {"dims": [8, 8, 8], "L": L_DEFAULT}, "dt": 0.01, "T": 0.1,
                       "ensemble_size": 2},
    "uniqueness-check": {"grid": {"dims": [8, 8, 8], "L": L_DEFAULT}, "dt": 0.01, "T": 0.1},
    "noise-audit": {"grid": {"dims": [8, 8, 8], "L": L_DEFAULT}, "audit": {"samples": 3}},
}


def test_14_determinism(tmp_path):
    differing, count = [], 0
    for cmd, extra in DETERMINISM_CONFIGS.items():
        cfg = _write_cfg(tmp_path / f"{cmd}.yaml", dict(extra, command=cmd, master_seed=4, workers=1))
        dirs = [tmp_path / cmd / r for r in ("a", "b")]
        codes = [cli.run(cfg, output_dir=str(d)) for d in dirs]
        files = sorted(str(f.relative_to(dirs[0])) for f in dirs[0].rglob("*") if f.is_file())
        other = sorted(str(f.relative_to(dirs[1])) for f in dirs[1].rglob("*") if f.is_file())
        if codes != [0, 0] or files != other:
            differing.append(cmd)
            continue
        count += len(files)
        _, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], files, shallow=False)
        differing.extend(f"{cmd}/{f}" for f in mismatch + errors)
    record(14, "CLI determinism", not differing and count > 0,
           f"{count} artifacts across 6 commands byte-identical" if not differing
           else f"differing: {differing}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
