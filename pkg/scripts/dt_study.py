"""Separate time and space error: rates at fixed N under shrinking dt, and at dt = 1/N^2.

With dt = 1/N the first-order time error dominates both norms, so the
observed rates sit near 1 regardless of the spatial order. This script
shows the split.

    python scripts/dt_study.py --case example2 --N 16
"""

import argparse

from forchfem.analysis import error_at_final_time, rate
from forchfem.cases import get_case
from forchfem.fespace import build_space
from forchfem.mesh import unit_square_mesh
from forchfem.solver import SolverConfig, run_simulation


def errors(case, N, dt, order):
    rep = run_simulation(build_space(unit_square_mesh(N), order), case.law, case, SolverConfig(dt=dt))
    e = error_at_final_time(rep, case)
    return e.l2_error, e.grad_lbeta_error


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--case", default="example2", choices=("example1", "example2"))
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--order", type=int, default=2)
    args = p.parse_args()
    case = get_case(args.case)

    print(f"fixed N={args.N}, r={args.order}: halving dt")
    print("dt,l2_error,l2_rate,grad_error,grad_rate")
    prev = None
    for k in range(2, 7):
        dt = 2.0**-k
        e = errors(case, args.N, dt, args.order)
        rates = ("", "") if prev is None else tuple(f"{rate(a, b):.2f}" for a, b in zip(prev, e))
        print(f"{dt:g},{e[0]:.3e},{rates[0]},{e[1]:.3e},{rates[1]}")
        prev = e

    print(f"\nr={args.order}, dt = 1/N^2: refining N")
    print("N,l2_error,l2_rate,grad_error,grad_rate")
    prev = None
    for N in (2, 4, 8):
        e = errors(case, N, 1.0 / N**2, args.order)
        rates = ("", "") if prev is None else tuple(f"{rate(a, b):.2f}" for a, b in zip(prev, e))
        print(f"{N},{e[0]:.3e},{rates[0]},{e[1]:.3e},{rates[1]}")
        prev = e


if __name__ == "__main__":
    main()
