"""Sparse assembly of the discrete operators of the backward Euler scheme.

Matrices are built from per-cell dense blocks, scattered as COO triplets and
compressed to CSR (duplicates summed in a fixed order, so repeated assemblies
are bitwise identical).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .fespace import DensityField, FESpace, values_and_gradients
from .law import GeneralizedPolynomial, eval_K, eval_K_and_xi_dK

BOUNDARY_GAUSS_POINTS = 4
W_FLOOR = 1e-300


def _finalize(space: FESpace, blocks: np.ndarray) -> sp.csr_matrix:
    dofs = space.cell_dofs
    nloc = dofs.shape[1]
    rows = np.repeat(dofs, nloc, axis=1).ravel()
    cols = np.tile(dofs, (1, nloc)).ravel()
    n = space.dof_count
    mat = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return mat


def mass_matrix(space: FESpace, degree: int | None = None) -> sp.csr_matrix:
    cq = space.cell_quadrature(degree)
    blocks = np.matmul(cq.phi.T[None] * cq.weights[:, None, :], cq.phi[None])
    return _finalize(space, blocks)


def _stiffness_blocks(cq, coef: np.ndarray) -> np.ndarray:
    # B[c, i, (q, k)] = d phi_i / d x_k at point q; blocks = B diag(w) B^T
    nc, nq, nl, _ = cq.dphi.shape
    B = cq.dphi.transpose(0, 2, 1, 3).reshape(nc, nl, 2 * nq)
    wq = np.repeat(cq.weights * coef, 2, axis=1)
    return np.matmul(B * wq[:, None, :], B.transpose(0, 2, 1))


def _weighted_stiffness(space: FESpace, coef: np.ndarray, degree=None) -> sp.csr_matrix:
    return _finalize(space, _stiffness_blocks(space.cell_quadrature(degree), coef))


def laplacian_matrix(space: FESpace, degree: int | None = None) -> sp.csr_matrix:
    cq = space.cell_quadrature(degree)
    return _weighted_stiffness(space, np.ones_like(cq.weights), degree)


def gradient_kernel(law: GeneralizedPolynomial, fld: DensityField, degree=None):
    """K(|grad rho|) and grad rho at the cell quadrature points."""
    _, grad = values_and_gradients(fld, degree)
    return eval_K(law, np.linalg.norm(grad, axis=-1)), grad


def picard_matrix(space: FESpace, frozen: DensityField, law: GeneralizedPolynomial, degree=None) -> sp.csr_matrix:
    """A_ij = (K(|grad rho*|) grad phi_j, grad phi_i) with K frozen at ``frozen``."""
    k, _ = gradient_kernel(law, frozen, degree)
    return _weighted_stiffness(space, k, degree)


def stiffness_apply(space: FESpace, fld: DensityField, law: GeneralizedPolynomial, degree=None) -> np.ndarray:
    """Vector (K(|grad rho|) grad rho, grad phi_i)."""
    cq = space.cell_quadrature(degree)
    k, grad = gradient_kernel(law, fld, degree)
    local = np.einsum("cqi,cqli->cl", (cq.weights * k)[..., None] * grad, cq.dphi, optimize=True)
    out = np.zeros(space.dof_count)
    np.add.at(out, space.cell_dofs.ravel(), local.ravel())
    return out


def newton_matrix(space: FESpace, fld: DensityField, law: GeneralizedPolynomial, degree=None) -> sp.csr_matrix:
    """Jacobian of :func:`stiffness_apply` at ``fld``.

    Adds (K'(|g|) / |g|) (g . grad phi_j)(g . grad phi_i) to the Picard matrix,
    written with xi K'(xi) / xi^2 so that zero gradients contribute nothing.
    """
    cq = space.cell_quadrature(degree)
    _, grad = values_and_gradients(fld, degree)
    xi = np.linalg.norm(grad, axis=-1)
    k, xdk = eval_K_and_xi_dK(law, xi)
    with np.errstate(divide="ignore", invalid="ignore"):
        extra = np.where(xi > 0, xdk / xi**2, 0.0)
    gp = np.einsum("cqk,cqlk->cql", grad, cq.dphi, optimize=True)
    blocks = _stiffness_blocks(cq, k)
    blocks += np.matmul(gp.transpose(0, 2, 1) * (cq.weights * extra)[:, None, :], gp)
    return _finalize(space, blocks)


def load_vector(space: FESpace, w, degree: int | None = None) -> np.ndarray:
    """b_i = (w, phi_i) for ``w(x)`` with ``x`` of shape (..., 2)."""
    cq = space.cell_quadrature(degree)
    vals = np.asarray(w(cq.points), dtype=float)
    local = (cq.weights * vals) @ cq.phi
    out = np.zeros(space.dof_count)
    np.add.at(out, space.cell_dofs.ravel(), local.ravel())
    return out


def volume_load(space: FESpace, f, t: float, degree: int | None = None) -> np.ndarray:
    """b_i = (f(., t), phi_i)."""
    return load_vector(space, lambda x: f(x, t), degree)


def _boundary_data(space: FESpace):
    key = "boundary"
    if key not in space._cache:
        from .fespace import reference_basis

        mesh = space.mesh
        facets = mesh.boundary_facets
        ends = mesh.vertices[np.array([f.vertices for f in facets])]  # (F, 2, 2)
        tri = np.array([f.triangle for f in facets])
        normals = np.array([f.normal for f in facets])
        gx, gw = np.polynomial.legendre.leggauss(BOUNDARY_GAUSS_POINTS)
        s = 0.5 * (gx + 1.0)
        pts = ends[:, 0, None, :] + s[None, :, None] * (ends[:, 1] - ends[:, 0])[:, None, :]
        lengths = np.linalg.norm(ends[:, 1] - ends[:, 0], axis=1)
        weights = 0.5 * lengths[:, None] * gw[None, :]
        p0 = mesh.vertices[mesh.triangles[tri, 0]]
        inv = np.linalg.inv(space.jacobians[tri])
        ref = np.einsum("fij,fqj->fqi", inv, pts - p0[:, None, :])
        phi, _ = reference_basis(space.order, ref)
        space._cache[key] = (pts, weights, np.broadcast_to(normals[:, None, :], pts.shape), phi, space.cell_dofs[tri])
    return space._cache[key]


def boundary_load(space: FESpace, psi, t: float) -> np.ndarray:
    """c_i = <psi(., t), phi_i> on the boundary; ``psi(x, t, normal)``."""
    pts, weights, normals, phi, dofs = _boundary_data(space)
    vals = np.asarray(psi(pts, t, normals), dtype=float)
    local = np.einsum("fq,fq,fql->fl", weights, vals, phi)
    out = np.zeros(space.dof_count)
    np.add.at(out, dofs.ravel(), local.ravel())
    return out
