"""Norms, errors against exact solutions, and convergence tables."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .fespace import DensityField, values_and_gradients
from .law import derived_exponents

CSV_HEADER = ("N", "h", "dt", "l2_error", "l2_rate", "grad_lbeta_error", "grad_lbeta_rate")


def _pointwise(fld: DensityField, exact=None, degree=None):
    vals, grads = values_and_gradients(fld, degree)
    cq = fld.space.cell_quadrature(degree)
    if exact is not None:
        vals = vals - exact.value(cq.points)
        grads = grads - exact.gradient(cq.points)
    return cq, vals, grads


@dataclass(frozen=True)
class ExactAt:
    """Analytic value/gradient pair frozen at one time level."""

    case: object
    t: float

    def value(self, x):
        return self.case.rho_exact(x, self.t)

    def gradient(self, x):
        return self.case.grad_exact(x, self.t)


def _lq(weights, vals, q):
    a = np.abs(vals)
    if q == math.inf:
        return float(np.max(a))
    return float(np.sum(weights * a**q) ** (1.0 / q))


def lq_norm(fld: DensityField, q: float, exact=None, degree: int | None = None) -> float:
    """||rho_h - rho||_{L^q}; ``exact=None`` gives ||rho_h||_{L^q}.

    For q = inf the maximum over all nodal coordinates and quadrature points
    of degree ``degree`` (default 2r + 2) is returned.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    cq, vals, _ = _pointwise(fld, exact, degree)
    if q == math.inf:
        nodal = fld.coeffs
        if exact is not None:
            nodal = nodal - exact.value(fld.space.dof_coords)
        return max(_lq(cq.weights, vals, q), float(np.max(np.abs(nodal))))
    return _lq(cq.weights, vals, q)


def grad_lbeta_norm(fld: DensityField, beta: float, exact=None, degree: int | None = None) -> float:
    """||grad(rho_h - rho)||_{L^beta} with the Euclidean norm of the gradient."""
    if beta < 1:
        raise ValueError(f"beta must be >= 1, got {beta}")
    cq, _, grads = _pointwise(fld, exact, degree)
    return _lq(cq.weights, np.linalg.norm(grads, axis=-1), beta)


@dataclass
class ErrorRecord:
    N: int
    h: float
    dt: float
    l2_error: float
    grad_lbeta_error: float
    lq_errors: dict = field(default_factory=dict)
    linf_error: float | None = None


def error_at_final_time(run, case, q_list=(), with_linf=False) -> ErrorRecord:
    fld = run.final
    exact = ExactAt(case, run.t_final)
    beta = derived_exponents(case.law).beta
    mesh = fld.space.mesh
    return ErrorRecord(
        N=mesh.N,
        h=mesh.h,
        dt=run.dt,
        l2_error=lq_norm(fld, 2, exact),
        grad_lbeta_error=grad_lbeta_norm(fld, beta, exact),
        lq_errors={q: lq_norm(fld, q, exact) for q in q_list},
        linf_error=lq_norm(fld, math.inf, exact) if with_linf else None,
    )


def rate(prev: float, curr: float) -> float | None:
    if not (prev > 0 and curr > 0) or not (math.isfinite(prev) and math.isfinite(curr)):
        return None
    return math.log2(prev / curr)


@dataclass
class ConvergenceTable:
    rows: list[ErrorRecord]
    l2_rates: list[float | None]
    grad_rates: list[float | None]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row, r2, rg in zip(self.rows, self.l2_rates, self.grad_rates):
            w.writerow([row.N, f"{row.h:.6e}", f"{row.dt:.6e}", f"{row.l2_error:.6e}", _fmt_rate(r2),
                        f"{row.grad_lbeta_error:.6e}", _fmt_rate(rg)])
        return buf.getvalue()

    def to_markdown(self, beta_label: str = "β") -> str:
        lines = [
            f"| N | ‖ρ−ρ_h‖ | Rates | ‖∇(ρ−ρ_h)‖_L^{beta_label} | Rates |",
            "|---|---|---|---|---|",
        ]
        for row, r2, rg in zip(self.rows, self.l2_rates, self.grad_rates):
            lines.append(
                f"| {row.N} | {row.l2_error:.2E} | {_fmt_rate(r2, '-')} | {row.grad_lbeta_error:.2E} | {_fmt_rate(rg, '-')} |"
            )
        return "\n".join(lines) + "\n"


def _fmt_rate(r, blank=""):
    return blank if r is None else f"{r:.2f}"


def convergence_rates(rows: list[ErrorRecord]) -> ConvergenceTable:
    """Rates log2(e_prev / e_curr) between consecutive doubling rows."""
    rows = sorted(rows, key=lambda r: r.N)
    for a, b in zip(rows, rows[1:]):
        if b.N != 2 * a.N:
            raise ValueError(f"mesh sizes must double, got {a.N} -> {b.N}")
    l2 = [None] + [rate(a.l2_error, b.l2_error) for a, b in zip(rows, rows[1:])]
    gr = [None] + [rate(a.grad_lbeta_error, b.grad_lbeta_error) for a, b in zip(rows, rows[1:])]
    return ConvergenceTable(rows, l2, gr)
