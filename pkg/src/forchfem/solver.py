"""Backward Euler time stepping with Picard or Newton nonlinear solves."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import analysis
from .assembly import (
    boundary_load,
    mass_matrix,
    newton_matrix,
    picard_matrix,
    stiffness_apply,
    volume_load,
)
from .fespace import DensityField, FESpace, l2_project
from .law import GeneralizedPolynomial, derived_exponents

log = logging.getLogger(__name__)

DIRECT_SOLVE_MAX_DOFS = 10_000


class SolverError(RuntimeError):
    pass


class NonConvergenceError(SolverError):
    def __init__(self, message, iterate=None, residual_norm=float("nan"), step=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual_norm = residual_norm
        self.step = step


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    T: float = 1.0
    nonlinear_tol: float = 1e-6
    max_nonlinear_iters: int = 50
    linear_tol: float = 1e-12
    linearization: str = "picard"
    damping: float = 1.0
    q_list: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.T >= self.dt:
            raise ValueError(f"T must be at least dt, got T={self.T}, dt={self.dt}")
        for name in ("nonlinear_tol", "linear_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_nonlinear_iters < 1:
            raise ValueError("max_nonlinear_iters must be at least 1")
        if self.linearization not in ("picard", "newton"):
            raise ValueError(f"linearization must be 'picard' or 'newton', got {self.linearization!r}")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if any(q < 1 for q in self.q_list):
            raise ValueError("monitor exponents q must be >= 1")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.T / self.dt)))

    @property
    def step_size(self) -> float:
        """dt adjusted so that it divides T exactly."""
        return self.T / self.n_steps


@dataclass
class StepMonitor:
    t: float
    iterations: int
    increment_norm: float
    residual_norm: float
    mass_balance: float
    l2_norm: float
    grad_lbeta_norm: float
    lq_norms: dict = field(default_factory=dict)


@dataclass
class RunReport:
    dt: float
    steps: list[StepMonitor]
    initial: StepMonitor
    final: DensityField
    t_final: float

    @property
    def iterations(self) -> list[int]:
        return [s.iterations for s in self.steps]

    @property
    def max_mass_balance(self) -> float:
        return max((abs(s.mass_balance) for s in self.steps), default=0.0)

    @property
    def max_l2_norm(self) -> float:
        return max([self.initial.l2_norm] + [s.l2_norm for s in self.steps])


def pcg(A, b, tol=1e-12, maxiter=None, x0=None):
    """Jacobi-preconditioned conjugate gradients; returns ``(x, iterations)``."""
    n = b.shape[0]
    maxiter = 10 * n if maxiter is None else maxiter
    dinv = 1.0 / A.diagonal()
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0
    r = b - A @ x
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, maxiter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            # the recursive residual drifts; confirm with the true one
            r = b - A @ x
            if np.linalg.norm(r) <= tol * bnorm:
                return x, it
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"conjugate gradients did not reach rtol {tol} in {maxiter} iterations")


def linear_solve(A, b, tol: float = 1e-12) -> np.ndarray:
    """Solve the SPD system A x = b to relative residual ``tol``."""
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    if A.shape[0] <= DIRECT_SOLVE_MAX_DOFS:
        try:
            x = spla.splu(A.tocsc()).solve(b)
        except RuntimeError as exc:
            raise SolverError(f"sparse factorization failed: {exc}") from exc
        rel = np.linalg.norm(b - A @ x) / bnorm
        if rel <= tol:
            return x
        # polish with CG from the direct solution
        x, _ = pcg(A, b, tol=tol, x0=x)
        return x
    x, _ = pcg(A, b, tol=tol)
    return x


def _monitor(fld, law, config, t, iterations=0, inc=0.0, res=0.0, balance=0.0) -> StepMonitor:
    beta = derived_exponents(law).beta
    return StepMonitor(
        t=t,
        iterations=iterations,
        increment_norm=inc,
        residual_norm=res,
        mass_balance=balance,
        l2_norm=analysis.lq_norm(fld, 2),
        grad_lbeta_norm=analysis.grad_lbeta_norm(fld, beta),
        lq_norms={q: analysis.lq_norm(fld, q) for q in config.q_list},
    )


def backward_euler_step(
    space: FESpace,
    law: GeneralizedPolynomial,
    prev: DensityField,
    t_n: float,
    config: SolverConfig,
    f: Callable,
    psi: Callable,
    dt: float | None = None,
    mass: sp.csr_matrix | None = None,
    info: dict | None = None,
) -> DensityField:
    """One step of the fully discrete scheme at time ``t_n``.

    Solves M (c - c_prev) / dt + S(c) + Psi - F = 0, where S is
    :func:`stiffness_apply`. Iterates until the successive-iterate 2-norm
    drops below ``config.nonlinear_tol``. ``info`` (if given) receives the
    iteration count, final increment and residual norms.
    """
    dt = config.step_size if dt is None else dt
    M = mass_matrix(space) if mass is None else mass
    c_prev = prev.coeffs
    load = volume_load(space, f, t_n) - boundary_load(space, psi, t_n)
    rhs = M @ c_prev / dt + load
    Mdt = M / dt

    def residual(c):
        return Mdt @ (c - c_prev) + stiffness_apply(space, DensityField(space, c), law) - load

    c = c_prev.copy()
    damping = config.damping
    last_inc = np.inf
    for k in range(1, config.max_nonlinear_iters + 1):
        cur = DensityField(space, c)
        if config.linearization == "picard":
            target = linear_solve(Mdt + picard_matrix(space, cur, law), rhs, config.linear_tol)
            step = target - c
        else:
            J = Mdt + newton_matrix(space, cur, law)
            step = linear_solve(J, -residual(c), config.linear_tol)
        inc = damping * np.linalg.norm(step)
        while k > 1 and inc > last_inc and damping > 1e-3:
            damping *= 0.5
            inc = damping * np.linalg.norm(step)
            log.debug("increment grew at iteration %d; damping -> %g", k, damping)
        c = c + damping * step
        last_inc = inc
        if inc <= config.nonlinear_tol:
            break
    else:
        raise NonConvergenceError(
            f"nonlinear solve at t={t_n:g} did not converge in {config.max_nonlinear_iters} iterations",
            iterate=DensityField(space, c),
            residual_norm=float(np.linalg.norm(residual(c))),
        )
    if info is not None:
        res = residual(c)
        info.update(iterations=k, increment_norm=float(inc), residual_norm=float(np.linalg.norm(res)))
        # w_h = 1: (rho^n - rho^{n-1}, 1)/dt - (f, 1) + <psi, 1>
        info["mass_balance"] = float(np.sum(M @ (c - c_prev)) / dt - np.sum(load))
    return DensityField(space, c)


def run_simulation(space: FESpace, law: GeneralizedPolynomial, case, config: SolverConfig) -> RunReport:
    """March from t = 0 to T starting at the L2 projection of ``case.rho0``."""
    dt = config.step_size
    fld = l2_project(space, case.rho0)
    M = mass_matrix(space)
    initial = _monitor(fld, law, config, 0.0)
    steps = []
    for n in range(1, config.n_steps + 1):
        t_n = n * dt
        info: dict = {}
        try:
            fld = backward_euler_step(space, law, fld, t_n, config, case.f, case.psi, dt=dt, mass=M, info=info)
        except NonConvergenceError as exc:
            exc.step = n
            raise
        except SolverError as exc:
            raise SolverError(f"step {n}: {exc}") from exc
        steps.append(
            _monitor(fld, law, config, t_n, info["iterations"], info["increment_norm"],
                     info["residual_norm"], info["mass_balance"])
        )
        log.debug("step %d t=%.4f iterations=%d", n, t_n, info["iterations"])
    return RunReport(dt=dt, steps=steps, initial=initial, final=fld, t_final=config.n_steps * dt)
