"""Structured simplicial background meshes with interior-face connectivity.

The background mesh covers an axis-aligned box with an n-by-n grid of
rectangles, each split into two triangles along the same diagonal
(from the lower-right to the upper-left corner of the cell). Uniform
refinement splits every triangle into four self-similar children, so the
mesh size halves exactly and all parent vertices persist.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import StructuralError


@dataclass(frozen=True)
class BackgroundMesh:
    """Conforming triangle mesh of an axis-aligned box.

    vertices: (nv, 2) coordinates.
    elements: (ne, 3) vertex indices, counterclockwise.
    box: ((ax, ay), (bx, by)).
    h: global mesh size, i.e. the longest edge (the cell diagonal).
    cell: (dx, dy) grid period of the structured construction.
    face_vertices: (nf, 2) vertex pair of each interior face, sorted.
    face_elements: (nf, 2) incident elements; column 0 is the plus side
        (the lower element index).
    face_normals: (nf, 2) unit normal pointing from plus to minus.
    face_lengths: (nf,) face lengths.
    """

    vertices: np.ndarray
    elements: np.ndarray
    box: tuple
    h: float
    cell: tuple
    face_vertices: np.ndarray
    face_elements: np.ndarray
    face_normals: np.ndarray
    face_lengths: np.ndarray

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_faces(self) -> int:
        return self.face_vertices.shape[0]


def build_structured_mesh(box, n: int) -> BackgroundMesh:
    """Build the n-by-n structured triangle mesh of ``box``.

    ``box`` is ((ax, ay), (bx, by)); every grid cell is split along the
    same diagonal, giving (n+1)^2 vertices and 2 n^2 triangles.
    """
    (ax, ay), (bx, by) = box
    if n < 1:
        raise ValueError(f"subdivision count must be >= 1, got {n}")
    if not (bx > ax and by > ay):
        raise ValueError(f"box must have positive extents, got {box}")

    xs = np.linspace(ax, bx, n + 1)
    ys = np.linspace(ay, by, n + 1)
    xv, yv = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([xv.ravel(), yv.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    i = i.ravel()
    j = j.ravel()
    v00 = vid(i, j)
    v10 = vid(i + 1, j)
    v01 = vid(i, j + 1)
    v11 = vid(i + 1, j + 1)
    # "/" split: both triangles share the v10-v01 diagonal.
    lower = np.column_stack([v00, v10, v01])
    upper = np.column_stack([v10, v11, v01])
    elements = np.empty((2 * n * n, 3), dtype=np.int64)
    elements[0::2] = lower
    elements[1::2] = upper

    dx = (bx - ax) / n
    dy = (by - ay) / n
    h = float(np.hypot(dx, dy))
    fv, fe, fn, fl = face_connectivity(vertices, elements)
    return BackgroundMesh(vertices, elements, ((ax, ay), (bx, by)), h, (dx, dy),
                          fv, fe, fn, fl)


def face_connectivity(vertices: np.ndarray, elements: np.ndarray):
    """Interior faces of a conforming triangle mesh.

    Returns (face_vertices, face_elements, face_normals, face_lengths)
    with the plus side being the lower incident element index and the
    unit normal pointing from plus to minus. Raises StructuralError for
    non-manifold edges (more than two incident elements).
    """
    ne = elements.shape[0]
    edges = elements[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2)
    keys = np.sort(edges, axis=1)
    owners = np.repeat(np.arange(ne, dtype=np.int64), 3)
    uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True,
                                      return_counts=True)
    if np.any(counts > 2):
        bad = uniq[counts > 2][0]
        raise StructuralError(f"non-manifold face {tuple(bad)} with "
                              f"{counts.max()} incident elements")
    order = np.argsort(inverse, kind="stable")
    owners_sorted = owners[order]
    offsets = np.concatenate([[0], np.cumsum(counts)])

    interior = np.flatnonzero(counts == 2)
    face_vertices = uniq[interior]
    # owners are ascending within each group (stable sort of an ascending
    # array), so column 0 is already the lower element index.
    face_elements = np.column_stack([owners_sorted[offsets[interior]],
                                     owners_sorted[offsets[interior] + 1]])

    pa = vertices[face_vertices[:, 0]]
    pb = vertices[face_vertices[:, 1]]
    d = pb - pa
    lengths = np.linalg.norm(d, axis=1)
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
    centroid_plus = vertices[elements[face_elements[:, 0]]].mean(axis=1)
    midpoint = 0.5 * (pa + pb)
    flip = np.einsum("fd,fd->f", normals, midpoint - centroid_plus) < 0.0
    normals[flip] *= -1.0
    return face_vertices, face_elements, normals, lengths


def refine_uniform(mesh: BackgroundMesh) -> BackgroundMesh:
    """Split every triangle into 4 self-similar children via edge midpoints."""
    elements = mesh.elements
    edges = elements[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2)
    keys = np.sort(edges, axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    midpoints = 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])

    mid = mesh.n_vertices + inverse.reshape(-1, 3)  # (ne, 3): m01, m12, m20
    v0, v1, v2 = elements[:, 0], elements[:, 1], elements[:, 2]
    m01, m12, m20 = mid[:, 0], mid[:, 1], mid[:, 2]
    children = np.empty((4 * mesh.n_elements, 3), dtype=np.int64)
    children[0::4] = np.column_stack([v0, m01, m20])
    children[1::4] = np.column_stack([m01, v1, m12])
    children[2::4] = np.column_stack([m20, m12, v2])
    children[3::4] = np.column_stack([m01, m12, m20])

    fv, fe, fn, fl = face_connectivity(vertices, children)
    dx, dy = mesh.cell
    # Exact halving: midpoint refinement scales every edge by 1/2.
    return BackgroundMesh(vertices, children, mesh.box, mesh.h / 2,
                          (dx / 2, dy / 2), fv, fe, fn, fl)


def element_areas(mesh: BackgroundMesh) -> np.ndarray:
    """Signed areas of all elements (positive for CCW orientation)."""
    p = mesh.vertices[mesh.elements]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def mesh_to_text(mesh: BackgroundMesh) -> str:
    """Plain-text dump: one ``v x y`` line per vertex, one ``e i j k``
    line per element."""
    lines = [f"v {float(x)!r} {float(y)!r}" for x, y in mesh.vertices]
    lines += [f"e {i} {j} {k}" for i, j, k in mesh.elements]
    return "\n".join(lines) + "\n"
