"""Manufactured problems on the unit square and their consistency oracles.

Callables take points ``x`` of shape (..., 2); boundary data ``psi`` also
receives the outward normal at each point so edge-wise formulas can be
selected without coordinate tests at corners.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import W_FLOOR
from .law import GeneralizedPolynomial, eval_K, flux, two_term_law


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    law: GeneralizedPolynomial
    rho_exact: Callable
    grad_exact: Callable
    f: Callable
    psi: Callable

    def rho0(self, x):
        return self.rho_exact(x, 0.0)


def _xy(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0], x[..., 1]


def example1() -> ManufacturedCase:
    """Zero-flux problem with rho = e^{-2t}[(x1^2+x2^2)/2 - (x1^3+x2^3)/3] + 1."""

    def shape(x1, x2):
        return 0.5 * (x1**2 + x2**2) - (x1**3 + x2**3) / 3.0

    def rho(x, t):
        x1, x2 = _xy(x)
        return np.exp(-2 * t) * shape(x1, x2) + 1.0

    def grad(x, t):
        x1, x2 = _xy(x)
        return np.exp(-2 * np.asarray(t))[..., None] * np.stack([x1 * (1 - x1), x2 * (1 - x2)], axis=-1)

    def f(x, t):
        x1, x2 = _xy(x)
        W = np.maximum(np.sqrt(x1**2 * (1 - x1) ** 2 + x2**2 * (1 - x2) ** 2), W_FLOOR)
        S = np.sqrt(1 + 4 * np.exp(-2 * t) * W)
        num = x1**2 * (1 - x1) ** 2 * (1 - 2 * x1) + x2**2 * (1 - x2) ** 2 * (1 - 2 * x2)
        return (
            -2 * np.exp(-2 * t) * shape(x1, x2)
            - 4 * np.exp(-2 * t) * (1 - x1 - x2) / (1 + S)
            + 4 * np.exp(-4 * t) * num / (W * (1 + S) ** 2 * S)
        )

    def psi(x, t, normal):
        return np.zeros(np.shape(x)[:-1])

    return ManufacturedCase("example1", two_term_law(), rho, grad, f, psi)


def example2() -> ManufacturedCase:
    """Nonzero-flux problem with rho = x1 x2 e^{-t} + 1."""

    def rho(x, t):
        x1, x2 = _xy(x)
        return x1 * x2 * np.exp(-t) + 1.0

    def grad(x, t):
        x1, x2 = _xy(x)
        return np.exp(-np.asarray(t))[..., None] * np.stack([x2, x1], axis=-1)

    def f(x, t):
        x1, x2 = _xy(x)
        r = np.sqrt(x1**2 + x2**2)
        S = np.sqrt(1 + 4 * np.exp(-t) * r)
        return -np.exp(-t) * x1 * x2 + 8 * np.exp(-2 * t) * x1 * x2 / (np.maximum(r, W_FLOOR) * (1 + S) ** 2 * S)

    def psi(x, t, normal):
        x1, x2 = _xy(x)
        n = np.asarray(normal, dtype=float)
        nx, ny = n[..., 0], n[..., 1]
        scale = 2 * np.exp(-t) / (1 + np.sqrt(1 + 4 * np.exp(-t) * np.sqrt(x1**2 + x2**2)))
        edge = np.select(
            [nx < -0.5, nx > 0.5, ny > 0.5, ny < -0.5],
            [x2, -x2, -x1, x1],
            default=np.nan,
        )
        return scale * edge

    return ManufacturedCase("example2", two_term_law(), rho, grad, f, psi)


def constant_case(value: float = 1.0, law: GeneralizedPolynomial | None = None) -> ManufacturedCase:
    """rho = value, f = 0, psi = 0."""
    law = two_term_law() if law is None else law
    return ManufacturedCase(
        "constant",
        law,
        lambda x, t: np.full(np.shape(x)[:-1], float(value)),
        lambda x, t: np.zeros(np.shape(x)),
        lambda x, t: np.zeros(np.shape(x)[:-1]),
        lambda x, t, n: np.zeros(np.shape(x)[:-1]),
    )


def steady_linear_case(law: GeneralizedPolynomial | None = None) -> ManufacturedCase:
    """rho = x1 with psi = -K(1) on x1 = 1, +K(1) on x1 = 0, zero elsewhere."""
    law = two_term_law() if law is None else law
    k1 = eval_K(law, 1.0)

    def psi(x, t, normal):
        return -k1 * np.asarray(normal, dtype=float)[..., 0]

    return ManufacturedCase(
        "steady_linear",
        law,
        lambda x, t: np.asarray(x, dtype=float)[..., 0].copy(),
        lambda x, t: np.broadcast_to(np.array([1.0, 0.0]), np.shape(x)).copy(),
        lambda x, t: np.zeros(np.shape(x)[:-1]),
        psi,
    )


CASES = {"example1": example1, "example2": example2, "constant": constant_case, "steady_linear": steady_linear_case}


def get_case(name: str, law: GeneralizedPolynomial | None = None) -> ManufacturedCase:
    if name not in CASES:
        raise KeyError(f"unknown case {name!r}; choose from {sorted(CASES)}")
    if name in ("constant", "steady_linear"):
        return CASES[name](law=law)
    return CASES[name]()


def pde_residual(case: ManufacturedCase, x, t, step: float = 1e-5):
    """rho_t - div(K(|grad rho|) grad rho) - f by central differences of the analytic flux."""
    x = np.asarray(x, dtype=float)
    rho_t = (case.rho_exact(x, t + step) - case.rho_exact(x, t - step)) / (2 * step)
    div = np.zeros(x.shape[:-1])
    for k in range(2):
        e = np.zeros(2)
        e[k] = step
        qp = flux(case.law, case.grad_exact(x + e, t))[..., k]
        qm = flux(case.law, case.grad_exact(x - e, t))[..., k]
        div += (qp - qm) / (2 * step)
    return rho_t - div - case.f(x, t)


def boundary_residual(case: ManufacturedCase, x, t, normal):
    """K(|grad rho|) grad rho . nu + psi at boundary points."""
    normal = np.asarray(normal, dtype=float)
    q = flux(case.law, case.grad_exact(x, t))
    return np.sum(q * normal, axis=-1) + case.psi(x, t, normal)


def random_boundary_points(rng: np.random.Generator, n: int):
    """Points uniformly on the four edges (corners excluded) with outward normals."""
    s = rng.uniform(0.0, 1.0, n)
    side = rng.integers(0, 4, n)
    normals = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])[side]
    pts = np.select(
        [side[:, None] == 0, side[:, None] == 1, side[:, None] == 2],
        [np.column_stack([s, 0 * s]), np.column_stack([1 + 0 * s, s]), np.column_stack([s, 1 + 0 * s])],
        default=np.column_stack([0 * s, s]),
    )
    return pts, normals


def check_consistency(case: ManufacturedCase, rng: np.random.Generator, n: int = 100,
                      pde_tol: float = 1e-4, bnd_tol: float = 1e-8) -> tuple[float, float]:
    """Maximum PDE and boundary residuals on random samples; raises if either exceeds its tolerance."""
    x = rng.uniform(0.02, 0.98, (n, 2))
    t = rng.uniform(0.0, 1.0, n)
    pde = float(np.max(np.abs(pde_residual(case, x, t))))
    pb, nb = random_boundary_points(rng, n)
    bnd = float(np.max(np.abs(boundary_residual(case, pb, rng.uniform(0.0, 1.0, n), nb))))
    if pde > pde_tol or bnd > bnd_tol:
        raise AssertionError(f"{case.name}: pde residual {pde:.3e}, boundary residual {bnd:.3e}")
    return pde, bnd
