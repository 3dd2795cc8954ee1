"""Randomized checks of the inequalities satisfied by K, H and the flux map.

Each check returns a :class:`PropertyResult`; ``run_property_suite`` runs all
of them for one law. Sample sizes default to the full verification sizes and
can be reduced for quick runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .law import (
    GeneralizedPolynomial,
    derived_exponents,
    eval_g,
    eval_H,
    eval_K,
    eval_K_and_xi_dK,
    eval_K_prime,
    flux,
    solve_s,
)


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def is_two_term(law: GeneralizedPolynomial) -> bool:
    return law.exponents == (0.0, 1.0) and law.coefficients == (1.0, 1.0)


def random_law(rng: np.random.Generator, max_terms: int = 4) -> GeneralizedPolynomial:
    n = int(rng.integers(2, max_terms + 1))
    alphas = np.concatenate([[0.0], np.sort(rng.uniform(0.1, 3.0, n - 1))])
    coeffs = rng.uniform(0.2, 3.0, n)
    return GeneralizedPolynomial(tuple(alphas), tuple(coeffs))


def _log_uniform(rng, lo, hi, size):
    return 10.0 ** rng.uniform(np.log10(lo), np.log10(hi), size)


def _random_vectors(rng, size):
    mag = _log_uniform(rng, 1e-4, 1e4, size)
    ang = rng.uniform(0, 2 * np.pi, size)
    return mag[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])


def check_root(law, rng, n=100_000):
    xi = np.concatenate([[0.0], _log_uniform(rng, 1e-10, 1e12, n - 1)])
    s = solve_s(law, xi)
    err = np.abs(s * eval_g(law, s) - xi) / np.maximum(xi, 1.0)
    order = np.argsort(xi)
    mono = bool(np.all(np.diff(s[order]) >= 0))
    worst = float(err.max())
    return PropertyResult("root consistency", worst <= 1e-12 and mono,
                          f"max |s g(s) - xi| / max(xi,1) = {worst:.2e}, monotone={mono}")


def check_closed_form(law, rng, n=10_000):
    if not is_two_term(law):
        return PropertyResult("closed-form K", True, "skipped (not the two-term law)")
    xi = np.concatenate([[0.0], _log_uniform(rng, 1e-8, 1e10, n - 1)])
    worst = float(np.max(np.abs(eval_K(law, xi) - 2.0 / (1.0 + np.sqrt(1.0 + 4.0 * xi)))))
    return PropertyResult("closed-form K", worst <= 1e-10, f"max deviation {worst:.2e}")


def check_range_and_decrease(law, rng, n=100_000):
    pairs = np.sort(_log_uniform(rng, 1e-8, 1e10, (n, 2)), axis=1)
    k = eval_K(law, pairs)
    in_range = bool(np.all(k > 0) and np.all(k <= 1.0 / law.a0) and eval_K(law, 0.0) == 1.0 / law.a0)
    dec = bool(np.all(k[:, 0] >= k[:, 1]))
    return PropertyResult("K in (0, 1/a0], decreasing", in_range and dec, f"range={in_range}, decreasing={dec}")


def check_power_increase(law, rng, n=100_000):
    pairs = np.sort(_log_uniform(rng, 1e-8, 1e10, (n, 2)), axis=1)
    pairs = pairs[pairs[:, 0] < pairs[:, 1]]
    k = eval_K(law, pairs)
    ok = []
    for p in (1, 2):
        v = k * pairs**p
        # rounding slack only
        ok.append(bool(np.all(v[:, 1] >= v[:, 0] * (1 - 1e-13))))
    return PropertyResult("K(xi) xi^n non-decreasing (n=1,2)", all(ok), f"n=1: {ok[0]}, n=2: {ok[1]}")


def check_envelope(law, rng, n=10_000):
    if not is_two_term(law):
        return PropertyResult("degeneracy envelope", True, "skipped (not the two-term law)")
    xi = np.concatenate([[0.0, 1e12], _log_uniform(rng, 1e-8, 1e12, n - 2)])
    v = eval_K(law, xi) * np.sqrt(1.0 + xi)
    ok = bool(np.all((v >= 0.5) & (v <= 1.5)))
    return PropertyResult("degeneracy envelope K(1+xi)^(1/2) in [0.5,1.5]", ok,
                          f"range [{v.min():.4f}, {v.max():.4f}]")


def check_derivative_bracket(law, rng, n=1000):
    a = derived_exponents(law).a
    xi = np.logspace(-6, 10, n)
    k, xdk = eval_K_and_xi_dK(law, xi)
    direct = eval_K_prime(law, xi) * xi
    lower = bool(np.all(xdk >= -a * k * (1 + 1e-12)))
    upper = bool(np.all(xdk <= 0))
    agree = bool(np.allclose(direct, xdk, rtol=1e-9, atol=0))
    return PropertyResult("-aK <= K' xi <= 0", lower and upper and agree,
                          f"lower={lower}, upper={upper}, consistent={agree}")


def check_vector_monotone(law, rng, n=100_000, slack=1e-12):
    beta = derived_exponents(law).beta
    y, yp = _random_vectors(rng, n), _random_vectors(rng, n)
    # include nearby pairs where the inequality is tight
    near = rng.random(n) < 0.3
    yp[near] = y[near] * (1 + rng.normal(0, 1e-2, (near.sum(), 1))) + rng.normal(0, 1e-3, (near.sum(), 2))
    d = yp - y
    lhs = np.sum((flux(law, yp) - flux(law, y)) * d, axis=1)
    m = np.maximum(np.linalg.norm(y, axis=1), np.linalg.norm(yp, axis=1))
    rhs = (beta - 1) * eval_K(law, m) * np.sum(d * d, axis=1)
    gap = lhs - rhs + slack
    worst = float(np.min(gap - slack))
    return PropertyResult("vector monotonicity", bool(np.all(gap >= 0)), f"min(lhs - rhs) = {worst:.3e}")


def check_lipschitz(law, rng, n=100_000):
    y, yp = _random_vectors(rng, n), _random_vectors(rng, n)
    near = rng.random(n) < 0.3
    yp[near] = y[near] + rng.normal(0, 1e-2, (near.sum(), 2))
    dist = np.linalg.norm(yp - y, axis=1)
    keep = dist > 0
    ratio = np.linalg.norm(flux(law, yp) - flux(law, y), axis=1)[keep] / dist[keep]
    worst = float(ratio.max())
    bound = 1.0 / law.a0
    return PropertyResult("Lipschitz bound 1/a0", worst <= bound + 1e-9, f"max ratio {worst:.6f} vs {bound:.6f}")


def check_H_sandwich(law, rng, n=100):
    xi = np.sort(_log_uniform(rng, 1e-3, 1e4, n))
    H = eval_H(law, xi)
    kx2 = eval_K(law, xi) * xi**2
    # H carries a relative quadrature error far below 1e-10
    lower = bool(np.all(H >= kx2 * (1 - 1e-10)))
    upper = bool(np.all(H <= 2 * kx2 * (1 + 1e-10)))
    zero = eval_H(law, 0.0) == 0.0
    return PropertyResult("K xi^2 <= H <= 2 K xi^2", lower and upper and zero,
                          f"lower={lower}, upper={upper}, H(0)=0: {zero}")


def check_exponents(law, rng=None):
    d = derived_exponents(law)
    ok = (0 < d.a < 1 and 1 < d.beta < 2 and d.lam > 2 and 0 < d.gamma < 1
          and abs(d.lam - (2 - d.a) / (1 - d.a)) <= 1e-12 * d.lam)
    return PropertyResult("derived exponents", ok, f"a={d.a:.6g}, beta={d.beta:.6g}, lambda={d.lam:.6g}, gamma={d.gamma:.6g}")


CHECKS = (
    check_exponents,
    check_root,
    check_closed_form,
    check_range_and_decrease,
    check_power_increase,
    check_envelope,
    check_derivative_bracket,
    check_vector_monotone,
    check_lipschitz,
    check_H_sandwich,
)


def run_property_suite(law: GeneralizedPolynomial, seed: int = 0) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    return [check(law, rng) for check in CHECKS]
