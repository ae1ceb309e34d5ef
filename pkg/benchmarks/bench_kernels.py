"""Compare the compiled and pure-Python quadrature kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Times each kernel on representative arguments, then one residual-plus-
Jacobian assembly of the desk heat-transfer problem at M = 8, and checks that
both backends agree.
"""
import argparse
import math
import timeit

import numpy as np

from momentdg import kernels
from momentdg.dg import DGSolution, OrderMap, assemble
from momentdg.problems import HeatTransferConfig, build_problem

CASES = {
    "recurrence_moments": lambda: kernels.recurrence_moments(40, 0.3, math.inf, 1.1, 0.2, 1.3),
    "finite_moments": lambda: kernels.finite_moments(40, -1.2, 2.5, 1.0, 0.1, 0.9, 12.0),
    "window_contract": lambda: kernels.window_contract(np.linspace(1, 2, 17), np.linspace(0, 1, 60), 40),
}


def _assembly():
    setup = build_problem(HeatTransferConfig())
    sol = DGSolution.zeros(setup.dg.mesh, OrderMap.uniform(setup.dg.mesh.n_elements, 8))
    return lambda: assemble(setup.dg, sol)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    try:
        kernels.use_backend("cython")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return 1
    backends = ("python", "cython")
    rows = []
    for name, fn in CASES.items():
        times, outs = {}, {}
        for b in backends:
            kernels.use_backend(b)
            outs[b] = fn()
            n = 2000
            times[b] = min(timeit.repeat(fn, number=n, repeat=args.repeat)) / n
        diff = np.max(np.abs(outs["python"] - outs["cython"]) / (1.0 + np.abs(outs["python"])))
        rows.append((name, times["python"], times["cython"], diff))
    times, res = {}, {}
    for b in backends:
        kernels.use_backend(b)
        fn = _assembly()
        res[b] = fn().residual
        times[b] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
    rows.append(("assemble (100 el, M=8)", times["python"], times["cython"],
                 np.max(np.abs(res["python"] - res["cython"]))))
    print(f"{'kernel':<26}{'python [s]':>14}{'cython [s]':>14}{'speedup':>10}{'max diff':>12}")
    for name, tp, tc, d in rows:
        print(f"{name:<26}{tp:>14.3e}{tc:>14.3e}{tp / tc:>10.1f}{d:>12.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
