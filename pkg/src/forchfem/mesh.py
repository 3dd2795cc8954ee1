"""Structured triangulation of the unit square."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class BoundaryFacet:
    vertices: tuple[int, int]
    triangle: int
    local_edge: int  # index of the edge opposite local vertex ``local_edge``
    normal: tuple[float, float]


@dataclass(frozen=True, eq=False)
class Mesh:
    """N x N squares, each split lower-left to upper-right into two triangles.

    Vertex ``j * (N + 1) + i`` sits at ``(i / N, j / N)``. Triangles are stored
    counter-clockwise; cell ``(i, j)`` owns triangles ``2 * (j * N + i)`` (below the
    diagonal) and ``2 * (j * N + i) + 1`` (above it).
    """

    N: int
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_facets: tuple[BoundaryFacet, ...]

    @property
    def h(self) -> float:
        return float(np.sqrt(2.0) / self.N)

    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def diameters(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        edges = [p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]]
        return np.max([np.linalg.norm(e, axis=1) for e in edges], axis=0)

    def edges(self) -> np.ndarray:
        """Unique undirected edges as a sorted (E, 2) array."""
        t = self.triangles
        e = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def dump(self, path) -> None:
        """Plain-text dump: ``v x y`` lines then ``t i j k`` lines."""
        lines = [f"v {x:.17g} {y:.17g}" for x, y in self.vertices]
        lines += [f"t {i} {j} {k}" for i, j, k in self.triangles]
        Path(path).write_text("\n".join(lines) + "\n")


def unit_square_mesh(N: int) -> Mesh:
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    xs = np.linspace(0.0, 1.0, N + 1)
    X, Y = np.meshgrid(xs, xs)  # row j varies y
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    v00 = (j * (N + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + N + 1
    v11 = v01 + 1
    tris = np.empty((2 * N * N, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([v00, v10, v11])
    tris[1::2] = np.column_stack([v00, v11, v01])

    facets = []
    for k in range(N):
        # bottom: cell (k, 0) lower triangle, edge v00-v10 opposite local vertex 2
        c = k
        facets.append(BoundaryFacet((int(v00[c]), int(v10[c])), 2 * c, 2, (0.0, -1.0)))
    for k in range(N):
        # right: cell (N-1, k) lower triangle, edge v10-v11 opposite local vertex 0
        c = k * N + N - 1
        facets.append(BoundaryFacet((int(v10[c]), int(v11[c])), 2 * c, 0, (1.0, 0.0)))
    for k in range(N):
        # top: cell (k, N-1) upper triangle, edge v11-v01 opposite local vertex 0
        c = (N - 1) * N + k
        facets.append(BoundaryFacet((int(v11[c]), int(v01[c])), 2 * c + 1, 0, (0.0, 1.0)))
    for k in range(N):
        # left: cell (0, k) upper triangle, edge v01-v00 opposite local vertex 1
        c = k * N
        facets.append(BoundaryFacet((int(v01[c]), int(v00[c])), 2 * c + 1, 1, (-1.0, 0.0)))

    vertices.setflags(write=False)
    tris.setflags(write=False)
    return Mesh(N=N, vertices=vertices, triangles=tris, boundary_facets=tuple(facets))


def boundary_facets(mesh: Mesh) -> tuple[BoundaryFacet, ...]:
    return mesh.boundary_facets


def facet_length(mesh: Mesh, facet: BoundaryFacet) -> float:
    a, b = mesh.vertices[list(facet.vertices)]
    return float(np.linalg.norm(b - a))
