"""Run configuration files (TOML).

Example::

    case = "example2"
    order = 2
    mesh_sizes = [4, 8, 16]
    T = 1.0
    q_list = [4.0]

    [law]
    terms = [[0.0, 1.0], [1.0, 1.0]]   # (exponent, coefficient) pairs

    [time]
    dt_policy = "tied_to_N"            # dt = T / N, or "fixed" with dt below
    dt = 0.05

    [solver]
    nonlinear_tol = 1e-6
    max_nonlinear_iters = 50
    linearization = "picard"           # or "newton"
    damping = 1.0

    [output]
    path = "table.csv"
    format = "csv"                     # or "markdown"

Every key is optional; missing keys take the defaults of :class:`RunConfiguration`.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .cases import CASES
from .law import GeneralizedPolynomial, LawError, two_term_law
from .solver import SolverConfig


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class RunConfiguration:
    law: GeneralizedPolynomial = field(default_factory=two_term_law)
    case: str = "example2"
    order: int = 2
    mesh_sizes: tuple[int, ...] = (4, 8, 16)
    dt_policy: str = "tied_to_N"
    dt: float | None = None
    T: float = 1.0
    nonlinear_tol: float = 1e-6
    max_nonlinear_iters: int = 50
    linearization: str = "picard"
    damping: float = 1.0
    q_list: tuple[float, ...] = ()
    output: str | None = None
    format: str = "csv"

    def dt_for(self, N: int) -> float:
        return self.T / N if self.dt_policy == "tied_to_N" else float(self.dt)

    def solver_config(self, N: int) -> SolverConfig:
        return SolverConfig(
            dt=self.dt_for(N),
            T=self.T,
            nonlinear_tol=self.nonlinear_tol,
            max_nonlinear_iters=self.max_nonlinear_iters,
            linearization=self.linearization,
            damping=self.damping,
            q_list=self.q_list,
        )


def _num(value, name, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if kind is int and int(value) != value:
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    return kind(value)


def parse_law(data) -> GeneralizedPolynomial:
    terms = data.get("terms") if isinstance(data, dict) else data
    if terms is None:
        return two_term_law()
    try:
        pairs = [(_num(p[0], "law.terms"), _num(p[1], "law.terms")) for p in terms]
        return GeneralizedPolynomial.from_pairs(pairs)
    except (LawError, TypeError, IndexError) as exc:
        raise ConfigError(f"law.terms: {exc}") from exc


def from_dict(data: dict) -> RunConfiguration:
    cfg = RunConfiguration()
    kw = {}
    if "law" in data:
        kw["law"] = parse_law(data["law"])
    if "case" in data:
        if data["case"] not in CASES:
            raise ConfigError(f"case: unknown case {data['case']!r}; choose from {sorted(CASES)}")
        kw["case"] = data["case"]
    if "order" in data:
        kw["order"] = _num(data["order"], "order", int)
        if kw["order"] not in (1, 2):
            raise ConfigError(f"order: must be 1 or 2, got {kw['order']}")
    if "mesh_sizes" in data:
        sizes = tuple(_num(n, "mesh_sizes", int) for n in data["mesh_sizes"])
        if not sizes or any(n < 1 for n in sizes):
            raise ConfigError("mesh_sizes: need at least one positive integer")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("mesh_sizes: must be strictly ascending")
        kw["mesh_sizes"] = sizes
    if "T" in data:
        kw["T"] = _num(data["T"], "T")
        if not kw["T"] > 0:
            raise ConfigError(f"T: must be positive, got {kw['T']}")
    if "q_list" in data:
        kw["q_list"] = tuple(_num(q, "q_list") for q in data["q_list"])
        if any(q < 1 for q in kw["q_list"]):
            raise ConfigError("q_list: exponents must be >= 1")
    time = data.get("time", {})
    if "dt_policy" in time:
        if time["dt_policy"] not in ("tied_to_N", "fixed"):
            raise ConfigError(f"time.dt_policy: must be 'tied_to_N' or 'fixed', got {time['dt_policy']!r}")
        kw["dt_policy"] = time["dt_policy"]
    if "dt" in time:
        kw["dt"] = _num(time["dt"], "time.dt")
        if not kw["dt"] > 0:
            raise ConfigError(f"time.dt: must be positive, got {kw['dt']}")
        kw.setdefault("dt_policy", "fixed")
    solver = data.get("solver", {})
    for key, kind in (("nonlinear_tol", float), ("max_nonlinear_iters", int), ("damping", float)):
        if key in solver:
            kw[key] = _num(solver[key], f"solver.{key}", kind)
    if "nonlinear_tol" in kw and not kw["nonlinear_tol"] > 0:
        raise ConfigError("solver.nonlinear_tol: must be positive")
    if "max_nonlinear_iters" in kw and kw["max_nonlinear_iters"] < 1:
        raise ConfigError("solver.max_nonlinear_iters: must be >= 1")
    if "damping" in kw and not 0 < kw["damping"] <= 1:
        raise ConfigError("solver.damping: must lie in (0, 1]")
    if "linearization" in solver:
        if solver["linearization"] not in ("picard", "newton"):
            raise ConfigError(f"solver.linearization: must be 'picard' or 'newton', got {solver['linearization']!r}")
        kw["linearization"] = solver["linearization"]
    out = data.get("output", {})
    if "path" in out:
        kw["output"] = str(out["path"])
    if "format" in out:
        if out["format"] not in ("csv", "markdown"):
            raise ConfigError(f"output.format: must be 'csv' or 'markdown', got {out['format']!r}")
        kw["format"] = out["format"]
    cfg = replace(cfg, **kw)
    if cfg.dt_policy == "fixed":
        if cfg.dt is None:
            raise ConfigError("time.dt: required when dt_policy is 'fixed'")
        if cfg.T < cfg.dt:
            raise ConfigError(f"time.dt: must not exceed T={cfg.T}")
    return cfg


def load_config(path) -> RunConfiguration:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config: {exc}") from exc
    return from_dict(data)
