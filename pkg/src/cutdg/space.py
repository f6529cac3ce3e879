"""Broken (element-local) P1 spaces on active meshes and the combined
bulk-surface degree-of-freedom map.

Each active element carries 3 vertex-based hat functions with no
inter-element continuity. The combined map stacks the bulk block first
and the surface block contiguously after it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .levelset import CutTopology
from .mesh import BackgroundMesh


@dataclass(frozen=True)
class BrokenSpace:
    """Discontinuous P1 space on a list of active elements.

    elements: ascending global element ids carrying unknowns.
    offset: first global dof index of this block.
    slot: (n_background_elements,) position of each element in the active
        list, or -1 if inactive.
    """

    elements: np.ndarray
    offset: int
    slot: np.ndarray

    @property
    def ndof(self) -> int:
        return 3 * self.elements.shape[0]

    def element_dofs(self, element: int) -> np.ndarray:
        """Global dof triple of one active element."""
        s = self.slot[element]
        if s < 0:
            raise KeyError(f"element {element} is not active in this space")
        return self.offset + 3 * s + np.arange(3)

    def dofs_array(self, elements: np.ndarray) -> np.ndarray:
        """(k, 3) global dofs for a batch of active elements."""
        s = self.slot[elements]
        if np.any(s < 0):
            raise KeyError("batch contains elements not active in this space")
        return self.offset + 3 * s[:, None] + np.arange(3)[None, :]


@dataclass(frozen=True)
class CombinedDofMap:
    """Bulk block [0, bulk.ndof) followed by the surface block."""

    bulk: BrokenSpace
    surface: BrokenSpace

    @property
    def ndof(self) -> int:
        return self.bulk.ndof + self.surface.ndof

    @property
    def n_bulk(self) -> int:
        return self.bulk.ndof

    @property
    def n_surface(self) -> int:
        return self.surface.ndof


def _make_space(active: np.ndarray, offset: int, n_elements: int) -> BrokenSpace:
    slot = np.full(n_elements, -1, dtype=np.int64)
    slot[active] = np.arange(active.size)
    return BrokenSpace(elements=active.copy(), offset=offset, slot=slot)


def build_spaces(mesh: BackgroundMesh, topo: CutTopology) -> CombinedDofMap:
    bulk = _make_space(topo.active_bulk, 0, mesh.n_elements)
    surface = _make_space(topo.active_surface, bulk.ndof, mesh.n_elements)
    return CombinedDofMap(bulk=bulk, surface=surface)


def element_gradients(tri: np.ndarray) -> np.ndarray:
    """(3, 2) constant gradients of the barycentric basis on one triangle."""
    p0, p1, p2 = np.asarray(tri, dtype=float)
    det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
    g1 = np.array([p2[1] - p0[1], p0[0] - p2[0]]) / det
    g2 = np.array([p0[1] - p1[1], p1[0] - p0[0]]) / det
    return np.vstack([-g1 - g2, g1, g2])


def all_element_gradients(mesh: BackgroundMesh) -> np.ndarray:
    """(ne, 3, 2) basis gradients for every background element."""
    p = mesh.vertices[mesh.elements]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    g1 = np.stack([d2[:, 1], -d2[:, 0]], axis=1) / det[:, None]
    g2 = np.stack([-d1[:, 1], d1[:, 0]], axis=1) / det[:, None]
    return np.stack([-g1 - g2, g1, g2], axis=1)


def evaluate_basis(tri: np.ndarray, points: np.ndarray):
    """Barycentric basis values and gradients on one triangle.

    Returns (values, gradients) with values of shape (..., 3) for points
    of shape (..., 2) and constant gradients of shape (3, 2). Values sum
    to 1 and gradients sum to the zero vector.
    """
    tri = np.asarray(tri, dtype=float)
    grads = element_gradients(tri)
    points = np.asarray(points, dtype=float)
    rel = points - tri[0]
    lam1 = rel @ grads[1]
    lam2 = rel @ grads[2]
    values = np.stack([1.0 - lam1 - lam2, lam1, lam2], axis=-1)
    return values, grads


def interpolate_nodal(space: BrokenSpace, mesh: BackgroundMesh,
                      f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Per-element vertex interpolation; returns the coefficient vector of
    this space block (length space.ndof)."""
    verts = mesh.vertices[mesh.elements[space.elements]]  # (na, 3, 2)
    vals = np.asarray(f(verts), dtype=float)
    return vals.reshape(-1)


def interpolate_pair(dofmap: CombinedDofMap, mesh: BackgroundMesh,
                     f_bulk, f_surface) -> np.ndarray:
    """Combined coefficient vector of the nodal interpolants of a
    bulk/surface callable pair."""
    u = np.empty(dofmap.ndof)
    u[:dofmap.n_bulk] = interpolate_nodal(dofmap.bulk, mesh, f_bulk)
    u[dofmap.n_bulk:] = interpolate_nodal(dofmap.surface, mesh, f_surface)
    return u


def coefficients_to_text(coeffs: np.ndarray) -> str:
    """Plain-text list of coefficients, one per line."""
    return "\n".join(repr(float(c)) for c in coeffs) + "\n"
