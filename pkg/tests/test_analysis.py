import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forchfem.analysis import (
    CSV_HEADER,
    ErrorRecord,
    convergence_rates,
    grad_lbeta_norm,
    lq_norm,
    rate,
)
from forchfem.fespace import DensityField, build_space, interpolate
from forchfem.mesh import unit_square_mesh

SP = build_space(unit_square_mesh(4), 2)


def field(fun):
    return interpolate(SP, fun)


def test_norm_examples():
    c = field(lambda x: np.full(x.shape[:-1], 3.0))
    assert lq_norm(c, 2) == pytest.approx(3.0, abs=1e-13)
    assert lq_norm(c, 4) == pytest.approx(3.0, abs=1e-13)
    assert lq_norm(field(lambda x: x[..., 0]), 2) == pytest.approx(1 / math.sqrt(3), abs=1e-13)
    assert lq_norm(field(lambda x: x[..., 0] * x[..., 1]), math.inf) == pytest.approx(1.0, abs=1e-15)
    assert grad_lbeta_norm(field(lambda x: x[..., 0]), 1.5) == pytest.approx(1.0, abs=1e-13)
    assert grad_lbeta_norm(c, 1.5) == pytest.approx(0.0, abs=1e-13)


def test_norm_rejects_small_exponent():
    with pytest.raises(ValueError):
        lq_norm(field(lambda x: x[..., 0]), 0.5)
    with pytest.raises(ValueError):
        grad_lbeta_norm(field(lambda x: x[..., 0]), 0.9)


def test_rate_examples():
    assert rate(0.2, 0.1) == pytest.approx(1.0)
    # published first rows of the two convergence tables
    assert rate(6.33e-2, 5.50e-2) == pytest.approx(0.20, abs=0.005)
    assert rate(4.40e-2, 2.24e-2) == pytest.approx(0.97, abs=0.005)
    assert rate(0.0, 0.1) is None and rate(1.0, math.nan) is None


def _row(N, e2, eg):
    return ErrorRecord(N=N, h=math.sqrt(2) / N, dt=1 / N, l2_error=e2, grad_lbeta_error=eg)


def test_convergence_table_formats():
    t = convergence_rates([_row(8, 0.1, 0.2), _row(4, 0.2, 0.4)])
    assert [r.N for r in t.rows] == [4, 8]
    assert t.l2_rates[0] is None and t.l2_rates[1] == pytest.approx(1.0)
    lines = t.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1].split(",")[4] == "" and lines[2].split(",")[4] == "1.00"
    md = t.to_markdown("3/2").splitlines()
    assert md[2].split("|")[3].strip() == "-"
    with pytest.raises(ValueError):
        convergence_rates([_row(4, 0.2, 0.4), _row(12, 0.1, 0.2)])


coeffs = st.lists(st.floats(-5, 5), min_size=SP.dof_count, max_size=SP.dof_count).map(np.array)


@settings(max_examples=30, deadline=None)
@given(coeffs, coeffs, st.floats(-4, 4), st.sampled_from([1.0, 1.5, 2.0, 4.0, math.inf]))
def test_norm_axioms(u, v, c, q):
    fu, fv = DensityField(SP, u), DensityField(SP, v)
    nu, nv = lq_norm(fu, q), lq_norm(fv, q)
    assert lq_norm(DensityField(SP, c * u), q) == pytest.approx(abs(c) * nu, rel=1e-12, abs=1e-12)
    assert lq_norm(DensityField(SP, u + v), q) <= nu + nv + 1e-12
    gu, gv = grad_lbeta_norm(fu, 1.5), grad_lbeta_norm(fv, 1.5)
    assert grad_lbeta_norm(DensityField(SP, u + v), 1.5) <= gu + gv + 1e-12


def test_quadrature_degree_consistency():
    # polynomial integrand of degree 4: any rule of degree >= 4 gives the same L2 norm
    f = field(lambda x: 1 + x[..., 0] * x[..., 1])
    assert lq_norm(f, 2, degree=4) == pytest.approx(lq_norm(f, 2, degree=12), rel=1e-14)
