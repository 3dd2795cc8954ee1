"""Regenerate both convergence tables (r = 2, dt = 1/N) as CSV and markdown.

    python scripts/reproduce_tables.py --max-N 64 --out results/
"""

import argparse
import time
from dataclasses import replace
from pathlib import Path

from forchfem.analysis import convergence_rates
from forchfem.cli import run_one
from forchfem.config import RunConfiguration

PAPER_L2 = {
    "example1": (6.33e-2, 5.50e-2, 4.52e-2, 3.50e-2, 2.53e-2, 1.73e-2, 1.13e-2, 7.19e-3),
    "example2": (4.40e-2, 2.24e-2, 1.15e-2, 5.90e-3, 3.01e-3, 1.53e-3, 7.70e-4, 3.94e-4),
}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--max-N", type=int, default=64)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--out", default="results")
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sizes = tuple(n for n in (4, 8, 16, 32, 64, 128, 256, 512) if n <= args.max_N)
    for case in ("example1", "example2"):
        cfg = replace(RunConfiguration(), case=case, order=args.order, mesh_sizes=sizes)
        t0 = time.perf_counter()
        rows = [run_one(cfg, N)[1] for N in sizes]
        table = convergence_rates(rows)
        (out / f"{case}.csv").write_text(table.to_csv())
        (out / f"{case}.md").write_text(table.to_markdown("3/2"))
        print(f"## {case} ({time.perf_counter() - t0:.0f} s)")
        print(table.to_markdown("3/2"))
        ratios = ", ".join(f"{r.l2_error / ref:.2f}" for r, ref in zip(rows, PAPER_L2[case]))
        print(f"L2 error / published: {ratios}\n")


if __name__ == "__main__":
    main()
