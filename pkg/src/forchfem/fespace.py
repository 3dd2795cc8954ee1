"""Continuous Lagrange P1/P2 spaces on a :class:`~forchfem.mesh.Mesh`."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .mesh import Mesh

MAX_QUADRATURE_DEGREE = 40


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Rule on the reference triangle (0,0), (1,0), (0,1).

    ``points`` are barycentric coordinates (l0, l1, l2); ``xy`` the matching
    reference coordinates (l1, l2). Weights sum to the reference area 1/2.
    """

    degree: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def xy(self) -> np.ndarray:
        return self.points[:, 1:]


@lru_cache(maxsize=None)
def quadrature_rule(degree: int) -> QuadratureRule:
    """Collapsed (Duffy) Gauss-Jacobi x Gauss-Legendre rule exact to ``degree``.

    All points lie strictly inside the triangle, so integrands that are only
    singular at vertices are never evaluated there.
    """
    if int(degree) != degree or degree < 1 or degree > MAX_QUADRATURE_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree!r}")
    n = (int(degree) + 2) // 2
    # x = u, y = (1 - u) v ; dA = (1 - u) du dv
    xu, wu = roots_jacobi(n, 1.0, 0.0)  # weight (1 - t) on [-1, 1]
    xv, wv = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (xu + 1.0)
    wu = wu / 4.0  # (1 - t) = 2 (1 - u), dt = 2 du
    v = 0.5 * (xv + 1.0)
    wv = wv / 2.0
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    x = U.ravel()
    y = ((1.0 - U) * V).ravel()
    pts = np.column_stack([1.0 - x - y, x, y])
    pts.setflags(write=False)
    w = W.ravel()
    w.setflags(write=False)
    return QuadratureRule(int(degree), pts, w)


# reference nodes: vertices, then midpoints of edges opposite vertex 0, 1, 2
_REF_NODES = {
    1: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    2: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5], [0.0, 0.5], [0.5, 0.0]]),
}


def reference_nodes(order: int) -> np.ndarray:
    return _REF_NODES[order]


def reference_basis(order: int, xy) -> tuple[np.ndarray, np.ndarray]:
    """Basis values (..., nloc) and reference gradients (..., nloc, 2) at ``xy``."""
    xy = np.asarray(xy, dtype=float)
    x = xy[..., 0]
    y = xy[..., 1]
    l0 = 1.0 - x - y
    # d(l0, l1, l2)/d(x, y)
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    lam = [l0, x, y]
    if order == 1:
        vals = np.stack(lam, axis=-1)
        grads = np.broadcast_to(dl, x.shape + (3, 2)).copy()
        return vals, grads
    if order != 2:
        raise ValueError(f"unsupported order {order!r}")
    vals = []
    grads = []
    for i in range(3):
        vals.append(lam[i] * (2.0 * lam[i] - 1.0))
        grads.append((4.0 * lam[i] - 1.0)[..., None] * dl[i])
    for i, (j, k) in enumerate([(1, 2), (0, 2), (0, 1)]):
        vals.append(4.0 * lam[j] * lam[k])
        grads.append(4.0 * (lam[k][..., None] * dl[j] + lam[j][..., None] * dl[k]))
    return np.stack(vals, axis=-1), np.stack(grads, axis=-2)


@dataclass(frozen=True, eq=False)
class CellQuadrature:
    """Quadrature data of a rule pushed to every cell."""

    rule: QuadratureRule
    points: np.ndarray  # (ncell, nq, 2) physical points
    weights: np.ndarray  # (ncell, nq) rule weight times |det J|
    phi: np.ndarray  # (nq, nloc)
    dphi: np.ndarray  # (ncell, nq, nloc, 2) physical gradients


@dataclass(frozen=True, eq=False)
class FESpace:
    mesh: Mesh
    order: int
    dof_count: int
    cell_dofs: np.ndarray  # (ncell, nloc)
    dof_coords: np.ndarray  # (dof_count, 2)
    jacobians: np.ndarray  # (ncell, 2, 2), columns are the reference edge vectors
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def nloc(self) -> int:
        return self.cell_dofs.shape[1]

    @property
    def default_degree(self) -> int:
        return 2 * self.order + 2

    def cell_quadrature(self, degree: int | None = None) -> CellQuadrature:
        degree = self.default_degree if degree is None else int(degree)
        if degree not in self._cache:
            rule = quadrature_rule(degree)
            p0 = self.mesh.vertices[self.mesh.triangles[:, 0]]
            pts = p0[:, None, :] + np.einsum("cij,qj->cqi", self.jacobians, rule.xy)
            det = np.abs(np.linalg.det(self.jacobians))
            phi, dref = reference_basis(self.order, rule.xy)
            inv_t = np.linalg.inv(self.jacobians).transpose(0, 2, 1)
            dphi = np.einsum("cij,qlj->cqli", inv_t, dref)
            self._cache[degree] = CellQuadrature(rule, pts, det[:, None] * rule.weights[None, :], phi, dphi)
        return self._cache[degree]


@dataclass(eq=False)
class DensityField:
    space: FESpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.dof_count,):
            raise ValueError(f"expected {self.space.dof_count} coefficients, got {self.coeffs.shape}")

    def copy(self) -> "DensityField":
        return DensityField(self.space, self.coeffs.copy())


def build_space(mesh: Mesh, r: int) -> FESpace:
    if r not in (1, 2):
        raise ValueError(f"only Lagrange orders 1 and 2 are supported, got {r!r}")
    tri = mesh.vertices[mesh.triangles]
    jac = np.stack([tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]], axis=2)
    ref = _REF_NODES[r]
    nodes = tri[:, 0][:, None, :] + np.einsum("cij,lj->cli", jac, ref)
    # all Lagrange nodes of the structured mesh sit on the grid of spacing 1 / (r N)
    m = r * mesh.N
    ij = np.rint(nodes * m).astype(np.int64)
    cell_dofs = ij[..., 1] * (m + 1) + ij[..., 0]
    g = np.linspace(0.0, 1.0, m + 1)
    X, Y = np.meshgrid(g, g)
    coords = np.column_stack([X.ravel(), Y.ravel()])
    cell_dofs.setflags(write=False)
    coords.setflags(write=False)
    jac.setflags(write=False)
    return FESpace(mesh, r, (m + 1) ** 2, cell_dofs, coords, jac)


def interpolate(space: FESpace, w) -> DensityField:
    """Nodal interpolant of ``w(x)`` where ``x`` has shape (..., 2)."""
    return DensityField(space, np.asarray(w(space.dof_coords), dtype=float))


def evaluate(fld: DensityField, element: int, local_point) -> tuple[float, np.ndarray]:
    """Value and physical gradient at reference point ``local_point`` of ``element``."""
    sp = fld.space
    phi, dref = reference_basis(sp.order, np.asarray(local_point, dtype=float))
    c = fld.coeffs[sp.cell_dofs[element]]
    inv_t = np.linalg.inv(sp.jacobians[element]).T
    return float(phi @ c), inv_t @ (dref.T @ c)


def values_and_gradients(fld: DensityField, degree: int | None = None):
    """Field values (ncell, nq) and gradients (ncell, nq, 2) at cell quadrature points."""
    cq = fld.space.cell_quadrature(degree)
    c = fld.coeffs[fld.space.cell_dofs]
    return c @ cq.phi.T, np.einsum("cl,cqli->cqi", c, cq.dphi, optimize=True)


def l2_project(space: FESpace, w) -> DensityField:
    """L2 projection of ``w(x)``: solve M c = b with b_i = (w, phi_i)."""
    from .assembly import load_vector, mass_matrix
    from .solver import linear_solve

    b = load_vector(space, lambda x: w(x))
    return DensityField(space, linear_solve(mass_matrix(space), b))
