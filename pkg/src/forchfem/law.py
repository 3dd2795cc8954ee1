"""Generalized Forchheimer law g(s) = sum a_i s^alpha_i and the derived kernel.

Every function accepts scalars or numpy arrays and broadcasts. ``solve_s``
inverts s -> s g(s) with a safeguarded Newton iteration, so no closed form is
assumed; the two-term law ``g(s) = 1 + s`` has ``K(xi) = 2 / (1 + sqrt(1 + 4 xi))``
which the test-suite uses as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

ROOT_RTOL = 1e-12
ROOT_MAXITER = 200
H_RTOL = 1e-8


class LawError(ValueError):
    """Invalid law parameters or argument outside the domain."""


class LawSolverError(RuntimeError):
    """Root or quadrature iteration failed to converge."""


@dataclass(frozen=True)
class GeneralizedPolynomial:
    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]

    def __post_init__(self):
        alphas = tuple(float(x) for x in self.exponents)
        coeffs = tuple(float(x) for x in self.coefficients)
        object.__setattr__(self, "exponents", alphas)
        object.__setattr__(self, "coefficients", coeffs)
        if len(alphas) != len(coeffs):
            raise LawError("exponents and coefficients differ in length")
        if len(alphas) < 2:
            raise LawError("a law needs at least two terms (N >= 1)")
        if alphas[0] != 0.0:
            raise LawError("first exponent must be exactly 0")
        if any(b <= a for a, b in zip(alphas, alphas[1:])):
            raise LawError("exponents must be strictly increasing")
        if not all(np.isfinite(alphas)) or not all(np.isfinite(coeffs)):
            raise LawError("law parameters must be finite")
        if any(c < 0 for c in coeffs):
            raise LawError("coefficients must be non-negative")
        if coeffs[0] <= 0:
            raise LawError("a_0 must be positive")
        if coeffs[-1] <= 0:
            raise LawError("a_N must be positive")

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> "GeneralizedPolynomial":
        """Build from ``[(exponent, coefficient), ...]`` as stored in run configs."""
        pairs = [tuple(p) for p in pairs]
        if any(len(p) != 2 for p in pairs):
            raise LawError("law entries must be (exponent, coefficient) pairs")
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def to_pairs(self) -> list[list[float]]:
        return [[a, c] for a, c in zip(self.exponents, self.coefficients)]

    @property
    def a0(self) -> float:
        return self.coefficients[0]

    @property
    def degree(self) -> float:
        return self.exponents[-1]


def two_term_law() -> GeneralizedPolynomial:
    """Forchheimer two-term law g(s) = 1 + s."""
    return GeneralizedPolynomial((0.0, 1.0), (1.0, 1.0))


@dataclass(frozen=True)
class DerivedExponents:
    a: float
    beta: float
    lam: float
    gamma: float


def derived_exponents(law: GeneralizedPolynomial) -> DerivedExponents:
    alpha_n = law.degree
    a = alpha_n / (alpha_n + 1.0)
    beta = 2.0 - a
    return DerivedExponents(a=a, beta=beta, lam=beta / (beta - 1.0), gamma=a / beta)


def _check_nonneg(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise LawError(f"{name} must be non-negative")
    return x


def _unwrap(x):
    return float(x) if np.ndim(x) == 0 else x


def _g(law, s):
    out = np.full_like(s, law.coefficients[0])
    for alpha, coef in zip(law.exponents[1:], law.coefficients[1:]):
        if coef:
            out += coef * s**alpha
    return out


def _dg(law, s):
    out = np.zeros_like(s)
    with np.errstate(divide="ignore"):
        for alpha, coef in zip(law.exponents[1:], law.coefficients[1:]):
            if coef:
                out += coef * alpha * s ** (alpha - 1.0)
    return out


def _s_dg(law, s):
    """s * g'(s), finite at s = 0 for every exponent."""
    out = np.zeros_like(s)
    for alpha, coef in zip(law.exponents[1:], law.coefficients[1:]):
        if coef:
            out += coef * alpha * s**alpha
    return out


def eval_g(law: GeneralizedPolynomial, s):
    s = _check_nonneg(s, "s")
    return _unwrap(_g(law, s))


def _solve_s(law, xi):
    xi = np.asarray(xi, dtype=float)
    s = np.zeros_like(xi)
    pos = xi > 0
    if not np.any(pos):
        return s
    x = xi[pos]
    # s g(s) >= a_0 s and s g(s) >= a_N s^(alpha_N+1) give an upper bracket.
    hi = np.minimum(x / law.a0, (x / law.coefficients[-1]) ** (1.0 / (law.degree + 1.0)))
    for _ in range(64):
        short = hi * _g(law, hi) < x
        if not np.any(short):
            break
        hi = np.where(short, 2.0 * hi, hi)
    lo = np.zeros_like(x)
    # s -> s g(s) is convex, so Newton started at the upper bracket descends monotonically.
    cur = hi.copy()
    tol = ROOT_RTOL * np.maximum(x, 1.0)
    # iterate well past the contract tolerance; Newton is quadratic near the root
    tight = 1e-3 * tol
    for _ in range(ROOT_MAXITER):
        gval = _g(law, cur)
        phi = cur * gval - x
        done = np.abs(phi) <= tight
        if np.all(done):
            break
        lo = np.where(phi < 0, np.maximum(lo, cur), lo)
        hi = np.where(phi > 0, np.minimum(hi, cur), hi)
        dphi = gval + _s_dg(law, cur)
        trial = cur - phi / dphi
        inside = (trial > lo) & (trial < hi)
        nxt = np.where(inside, trial, 0.5 * (lo + hi))
        stalled = (nxt == cur) | (hi - lo <= 4 * np.finfo(float).eps * hi)
        cur = np.where(done | stalled, cur, nxt)
        if np.all(done | stalled):
            break
    resid = np.abs(cur * _g(law, cur) - x)
    bad = resid > tol
    if np.any(bad):
        # the bracket collapsed to adjacent floats; accept if no float does better
        nb = np.nextafter(cur, np.inf)
        pb = np.nextafter(cur, 0.0)
        best = np.minimum(resid, np.minimum(np.abs(nb * _g(law, nb) - x), np.abs(pb * _g(law, pb) - x)))
        if np.any(best[bad] < resid[bad]):
            raise LawSolverError("root iteration for s g(s) = xi did not converge")
    s[pos] = cur
    return s


def _g_scalar(law, v: float) -> float:
    return sum(c * v**alpha for alpha, c in zip(law.exponents, law.coefficients))


def _solve_s_scalar(law, x: float) -> float:
    """Float-only twin of :func:`_solve_s` for quadrature integrands (no array overhead)."""
    if x <= 0.0:
        return 0.0
    pairs = list(zip(law.exponents, law.coefficients))

    def phi_dphi(v):
        g = sg = 0.0
        for alpha, c in pairs:
            term = c * v**alpha
            g += term
            sg += alpha * term
        return v * g - x, g + sg

    hi = min(x / law.a0, (x / law.coefficients[-1]) ** (1.0 / (law.degree + 1.0)))
    while phi_dphi(hi)[0] < 0:
        hi *= 2.0
    lo, cur = 0.0, hi
    tight = 1e-3 * ROOT_RTOL * max(x, 1.0)
    for _ in range(ROOT_MAXITER):
        phi, dphi = phi_dphi(cur)
        if abs(phi) <= tight:
            return cur
        if phi < 0:
            lo = max(lo, cur)
        else:
            hi = min(hi, cur)
        trial = cur - phi / dphi
        nxt = trial if lo < trial < hi else 0.5 * (lo + hi)
        if nxt == cur or hi - lo <= 4 * np.finfo(float).eps * hi:
            break
        cur = nxt
    if abs(phi_dphi(cur)[0]) > ROOT_RTOL * max(x, 1.0):
        # fall back to the vectorized solver and its float-neighbour acceptance test
        return float(_solve_s(law, np.array([x]))[0])
    return cur


def solve_s(law: GeneralizedPolynomial, xi):
    """Unique non-negative root of s g(s) = xi."""
    xi = _check_nonneg(xi, "xi")
    return _unwrap(_solve_s(law, xi))


def eval_K(law: GeneralizedPolynomial, xi):
    xi = _check_nonneg(xi, "xi")
    return _unwrap(1.0 / _g(law, _solve_s(law, xi)))


def eval_K_prime(law: GeneralizedPolynomial, xi):
    """K'(xi) by implicit differentiation; -inf at xi = 0 when some 0 < alpha_i < 1."""
    xi = _check_nonneg(xi, "xi")
    s = _solve_s(law, xi)
    g = _g(law, s)
    dg = _dg(law, s)
    ds = 1.0 / (g + _s_dg(law, s))
    with np.errstate(invalid="ignore"):
        out = np.where(dg == 0, 0.0, -dg * ds / g**2)
    return _unwrap(out)


def eval_K_and_xi_dK(law: GeneralizedPolynomial, xi):
    """Return ``(K(xi), xi K'(xi))``, the latter finite everywhere including xi = 0."""
    xi = np.asarray(xi, dtype=float)
    s = _solve_s(law, xi)
    g = _g(law, s)
    sdg = _s_dg(law, s)
    # xi K' = -s g' / (g (g + s g')) using xi = s g.
    return 1.0 / g, -sdg / (g * (g + sdg))


def eval_H(law: GeneralizedPolynomial, xi):
    """H(xi) = int_0^{xi^2} K(sqrt(s)) ds, evaluated as int_0^xi 2u K(u) du."""
    xi = _check_nonneg(xi, "xi")

    def one(x):
        if x == 0.0:
            return 0.0
        val, err, info = integrate.quad(
            lambda u: 2.0 * u / _g_scalar(law, _solve_s_scalar(law, u)),
            0.0, x, epsabs=0.0, epsrel=1e-2 * H_RTOL, limit=400, full_output=True,
        )[:3]
        if abs(err) > H_RTOL * abs(val):
            raise LawSolverError(f"quadrature for H({x}) did not reach rtol {H_RTOL}")
        return val

    out = np.vectorize(one, otypes=[float])(xi)
    return _unwrap(out)


def flux(law: GeneralizedPolynomial, y):
    """K(|y|) y for a vector y, or a stack of vectors along the last axis."""
    y = np.asarray(y, dtype=float)
    norm = np.linalg.norm(y, axis=-1)
    k = 1.0 / _g(law, _solve_s(law, norm))
    return k[..., None] * y
