"""Command-line front end: ``forchfem solve|converge|verify``.

Exit codes: 0 success, 1 property failure, 2 configuration error,
3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .analysis import convergence_rates, error_at_final_time
from .cases import get_case
from .config import ConfigError, RunConfiguration, load_config, parse_law
from .fespace import build_space
from .law import derived_exponents
from .mesh import unit_square_mesh
from .properties import run_property_suite
from .solver import SolverError, run_simulation

EXIT_OK, EXIT_PROPERTY, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def run_one(cfg: RunConfiguration, N: int):
    case = get_case(cfg.case, cfg.law)
    if cfg.case in ("example1", "example2") and case.law != cfg.law:
        raise ConfigError(f"law.terms: case {cfg.case} is manufactured for g(s) = 1 + s")
    space = build_space(unit_square_mesh(N), cfg.order)
    report = run_simulation(space, case.law, case, cfg.solver_config(N))
    return report, error_at_final_time(report, case, q_list=cfg.q_list)


def _run_for_table(args):
    cfg, N = args
    return run_one(cfg, N)[1]


def solve_report(cfg: RunConfiguration, report, errors, fmt: str) -> str:
    qs = list(cfg.q_list)
    head = ["step", "t", "iterations", "increment_norm", "residual_norm", "mass_balance",
            "l2_norm", "grad_lbeta_norm"] + [f"lq_norm_{q:g}" for q in qs] + ["l2_error", "grad_lbeta_error"]
    rows = []
    monitors = [report.initial] + report.steps
    for n, m in enumerate(monitors):
        last = n == len(monitors) - 1
        rows.append([n, f"{m.t:.6g}", m.iterations, f"{m.increment_norm:.3e}", f"{m.residual_norm:.3e}",
                     f"{m.mass_balance:.3e}", f"{m.l2_norm:.10e}", f"{m.grad_lbeta_norm:.10e}"]
                    + [f"{m.lq_norms[q]:.10e}" for q in qs]
                    + ([f"{errors.l2_error:.6e}", f"{errors.grad_lbeta_error:.6e}"] if last else ["", ""]))
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(head)
        w.writerows(rows)
        return buf.getvalue()
    beta = derived_exponents(cfg.law).beta
    lines = [
        f"# {cfg.case}, N={errors.N}, r={cfg.order}, dt={errors.dt:.6g}, T={cfg.T:g}",
        "",
        f"- L2 error at T: {errors.l2_error:.6e}",
        f"- grad L^{beta:g} error at T: {errors.grad_lbeta_error:.6e}",
        f"- nonlinear iterations: {sum(report.iterations)} total, max {max(report.iterations, default=0)}",
        f"- max |mass balance|: {report.max_mass_balance:.3e}",
        "",
        "| " + " | ".join(head) + " |",
        "|" + "---|" * len(head),
    ]
    lines += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def _emit(text: str, path):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(cfg: RunConfiguration, N: int | None = None) -> int:
    if N is None:
        if len(cfg.mesh_sizes) != 1:
            raise ConfigError("mesh_sizes: solve needs exactly one mesh size (or pass --N)")
        N = cfg.mesh_sizes[0]
    report, errors = run_one(cfg, N)
    _emit(solve_report(cfg, report, errors, cfg.format), cfg.output)
    if cfg.output:
        print(f"l2_error={errors.l2_error:.6e} grad_lbeta_error={errors.grad_lbeta_error:.6e} -> {cfg.output}")
    return EXIT_OK


def cmd_converge(cfg: RunConfiguration, jobs: int = 1) -> int:
    sizes = list(cfg.mesh_sizes)
    if any(b != 2 * a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError("mesh_sizes: each size must double the previous one for rate computation")
    work = [(cfg, N) for N in sizes]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_for_table, work))
    else:
        rows = [_run_for_table(w) for w in work]
    table = convergence_rates(rows)
    beta = derived_exponents(cfg.law).beta
    text = table.to_csv() if cfg.format == "csv" else table.to_markdown(f"{beta:g}")
    _emit(text, cfg.output)
    return EXIT_OK


def cmd_verify(cfg: RunConfiguration, seed: int = 0) -> int:
    results = run_property_suite(cfg.law, seed)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    return EXIT_PROPERTY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="forchfem", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("solve", "converge", "verify"):
        s = sub.add_parser(name)
        s.add_argument("--config", help="TOML run configuration")
        s.add_argument("--output", help="output file (default: stdout)")
        s.add_argument("--format", choices=("csv", "markdown"))
        s.add_argument("--seed", type=int, default=0, help="sampling seed for the property suite")
        if name == "solve":
            s.add_argument("--N", type=int, help="mesh size (overrides mesh_sizes)")
        if name == "converge":
            s.add_argument("--jobs", type=int, default=1, help="mesh sizes solved in parallel")
        if name == "verify":
            s.add_argument("--law", help="law as exponent:coefficient pairs, e.g. '0:1,1:1'")
    return p


def _law_arg(text: str):
    try:
        pairs = [tuple(float(v) for v in item.split(":")) for item in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"law: cannot parse {text!r}") from exc
    return parse_law({"terms": pairs})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfiguration()
        over = {}
        if args.output:
            over["output"] = args.output
        if args.format:
            over["format"] = args.format
        if getattr(args, "law", None):
            over["law"] = _law_arg(args.law)
        if over:
            cfg = replace(cfg, **over)
        if args.command == "solve":
            return cmd_solve(cfg, args.N)
        if args.command == "converge":
            return cmd_converge(cfg, args.jobs)
        return cmd_verify(cfg, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        step = getattr(exc, "step", None)
        where = f" (step {step})" if step else ""
        print(f"solver error{where}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
