"""Compiled vs NumPy kernels.

    python benchmarks/bench_kernels.py [--sizes 16 32 64] [--repeat 5]

Prints the best-of-``repeat`` wall time per call for each backend, the
speedup, and the max relative disagreement between the two results.
"""

import argparse
import importlib
import timeit

import numpy as np

from stochns import _kernels_py, kernels


def _compiled():
    try:
        return importlib.import_module("stochns._kernels")
    except ImportError:
        return None


def _cases(n, rng):
    u = rng.standard_normal((3, n, n, n))
    spacing = np.full(3, 0.5)
    coef6 = np.asarray(kernels.FD_COEFFICIENTS[6])
    cases = [
        (f"power_sum p=4 {n}^3", lambda m: m.power_sum(u, 4.0)),
        (f"power_sum p=12 {n}^3", lambda m: m.power_sum(u, 12.0)),
        (f"power_sum p=4.5 {n}^3", lambda m: m.power_sum(u, 4.5)),
        (f"fd_grad_power_energy o6 {n}^3",
         lambda m: m.fd_grad_power_energy(u[0].copy(), 2.0, spacing, 3, coef6)),
    ]
    if n <= 16:
        f = rng.standard_normal((n, n, n))
        ker = rng.random((n, n, n))
        cases.append((f"periodic_convolve {n}^3", lambda m: m.periodic_convolve(f, ker, 0.1)))
    return cases


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    fast = _compiled()
    if fast is None:
        print("compiled extension not built; only the NumPy backend is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'numpy [ms]':>11s} {'cython [ms]':>12s} {'speedup':>8s} {'rel diff':>9s}")
    for n in args.sizes:
        for name, call in _cases(n, rng):
            t_py = min(timeit.repeat(lambda: call(_kernels_py), number=1, repeat=args.repeat))
            if fast is None:
                print(f"{name:34s} {t_py * 1e3:11.3f}")
                continue
            t_cy = min(timeit.repeat(lambda: call(fast), number=1, repeat=args.repeat))
            a, b = np.asarray(call(_kernels_py)), np.asarray(call(fast))
            rel = float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300))
            print(f"{name:34s} {t_py * 1e3:11.3f} {t_cy * 1e3:12.3f} {t_py / t_cy:8.2f} {rel:9.1e}")


if __name__ == "__main__":
    main()
