"""Level sets, discrete level sets and the cut topology they induce.

The surface is described by a signed distance function (negative inside
the bulk domain). Its continuous piecewise-linear interpolant on the
background mesh defines the discrete surface (zero level set) and the
discrete bulk domain (negative region). This module classifies active
elements and faces, extracts the polygonal surface segments with their
normals and edge co-normals, and checks how well the discrete geometry
approximates the exact one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ConfigurationError, StructuralError
from .mesh import BackgroundMesh

SNAP_FACTOR = 1e-10
DEGENERATE_SEGMENT_FACTOR = 1e-14


@dataclass(frozen=True)
class LevelSet:
    """Signed distance description of a closed (or plane) surface.

    rho: signed distance, negative inside the bulk domain; vectorized
        over (..., 2) point arrays.
    closest_point: map onto the surface, defined for |rho| < validity_radius.
    normal: exact unit normal at the closest point of the argument.
    validity_radius: radius of the tubular neighborhood on which the
        closest-point map is well defined.
    """

    rho: Callable[[np.ndarray], np.ndarray]
    closest_point: Callable[[np.ndarray], np.ndarray]
    normal: Callable[[np.ndarray], np.ndarray]
    validity_radius: float


def closest_point_circle(points: np.ndarray, center=(0.0, 0.0),
                         radius: float = 1.0) -> np.ndarray:
    """Project points radially onto the circle. Errors at the center."""
    points = np.asarray(points, dtype=float)
    c = np.asarray(center, dtype=float)
    d = points - c
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0.0):
        raise ValueError("closest point undefined at the circle center")
    return c + radius * d / r[..., None]


def circle_levelset(center=(0.0, 0.0), radius: float = 1.0) -> LevelSet:
    c = np.asarray(center, dtype=float)

    def rho(x):
        return np.linalg.norm(np.asarray(x, dtype=float) - c, axis=-1) - radius

    def normal(x):
        d = np.asarray(x, dtype=float) - c
        return d / np.linalg.norm(d, axis=-1)[..., None]

    def closest(x):
        return closest_point_circle(x, center=c, radius=radius)

    return LevelSet(rho=rho, closest_point=closest, normal=normal,
                    validity_radius=radius)


def line_levelset(normal, offset: float) -> LevelSet:
    """Half-plane level set rho(x) = n.x - offset with |n| = 1."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)

    def rho(x):
        return np.asarray(x, dtype=float) @ n - offset

    def closest(x):
        x = np.asarray(x, dtype=float)
        return x - rho(x)[..., None] * n

    def nrm(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(n, x.shape).copy()

    return LevelSet(rho=rho, closest_point=closest, normal=nrm,
                    validity_radius=np.inf)


@dataclass(frozen=True)
class DiscreteLevelSet:
    """Nodal values of the continuous piecewise-linear interpolant.

    Values within snap_tol of zero were replaced by -snap_tol, so no
    vertex value is exactly zero and every cut element has exactly two
    sign-change edges.
    """

    values: np.ndarray
    snap_tol: float


def interpolate_levelset(ls: LevelSet, mesh: BackgroundMesh,
                         snap_factor: float = SNAP_FACTOR) -> DiscreteLevelSet:
    values = np.asarray(ls.rho(mesh.vertices), dtype=float).copy()
    snap = snap_factor * mesh.h
    values[np.abs(values) < snap] = -snap
    return DiscreteLevelSet(values=values, snap_tol=snap)


@dataclass(frozen=True)
class SurfaceGeometry:
    """Polygonal discrete surface: one straight segment per cut element.

    element: (ns,) owning element of each segment.
    points: (ns, 2, 2) segment endpoints; shared endpoints are
        bit-identical because they are computed once per mesh edge.
    normal: (ns, 2) unit segment normal pointing into the positive region.
    length: (ns,) segment lengths.
    edge_point: (nE, 2) interior surface edges (points shared by exactly
        two segments).
    edge_segments: (nE, 2) incident segment indices, plus side first
        (lower owning element index).
    edge_conormals: (nE, 2, 2) outward unit co-normals of the plus and
        minus segment at the edge.
    """

    element: np.ndarray
    points: np.ndarray
    normal: np.ndarray
    length: np.ndarray
    edge_point: np.ndarray
    edge_segments: np.ndarray
    edge_conormals: np.ndarray

    @property
    def n_segments(self) -> int:
        return self.element.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_point.shape[0]


@dataclass(frozen=True)
class CutTopology:
    """Active meshes, face sets and the extracted discrete surface.

    active_bulk: elements whose interior meets the discrete bulk domain
        (some vertex value negative).
    active_surface: active elements crossed by the discrete surface
        (vertex values of both signs); always a subset of active_bulk.
    bulk_faces: interior faces with both incident elements in active_bulk.
    bulk_ghost_faces: bulk faces with at least one incident element in
        active_surface (the ghost-penalty band).
    surface_faces: interior faces with both incident elements in
        active_surface.
    surface: segment/edge geometry, or None if not extracted.
    """

    active_bulk: np.ndarray
    active_surface: np.ndarray
    bulk_faces: np.ndarray
    bulk_ghost_faces: np.ndarray
    surface_faces: np.ndarray
    surface: SurfaceGeometry | None


def classify_elements(mesh: BackgroundMesh, dls: DiscreteLevelSet) -> CutTopology:
    """Classify elements and faces from snapped nodal level-set values.

    The surface geometry field is left unset; use build_cut_topology for
    the complete structure.
    """
    vals = dls.values[mesh.elements]
    is_bulk = vals.min(axis=1) < 0.0
    is_cut = is_bulk & (vals.max(axis=1) > 0.0)
    active_bulk = np.flatnonzero(is_bulk)
    active_surface = np.flatnonzero(is_cut)
    if active_bulk.size == 0:
        raise ConfigurationError("surface misses the background box: "
                                 "no element has a negative vertex value")

    fe = mesh.face_elements
    both_bulk = is_bulk[fe[:, 0]] & is_bulk[fe[:, 1]]
    bulk_faces = np.flatnonzero(both_bulk)
    ghost = both_bulk & (is_cut[fe[:, 0]] | is_cut[fe[:, 1]])
    bulk_ghost_faces = np.flatnonzero(ghost)
    both_cut = is_cut[fe[:, 0]] & is_cut[fe[:, 1]]
    surface_faces = np.flatnonzero(both_cut)
    return CutTopology(active_bulk, active_surface, bulk_faces,
                       bulk_ghost_faces, surface_faces, surface=None)


def _edge_zero(mesh, dls, a, b):
    """Zero of the linear interpolant on edge (a, b), computed from the
    sorted vertex pair so that both incident elements share the exact
    same floating-point point."""
    if a > b:
        a, b = b, a
    va, vb = dls.values[a], dls.values[b]
    t = va / (va - vb)
    return mesh.vertices[a] + t * (mesh.vertices[b] - mesh.vertices[a])


def extract_surface_segments(mesh: BackgroundMesh,
                             dls: DiscreteLevelSet) -> SurfaceGeometry:
    """Extract one straight segment per cut element plus interior edges."""
    vals = dls.values[mesh.elements]
    is_cut = (vals.min(axis=1) < 0.0) & (vals.max(axis=1) > 0.0)
    cut_elements = np.flatnonzero(is_cut)

    zero_cache: dict[tuple[int, int], np.ndarray] = {}
    seg_points = np.empty((cut_elements.size, 2, 2))
    seg_normal = np.empty((cut_elements.size, 2))
    endpoint_keys = []

    for s, e in enumerate(cut_elements):
        tri = mesh.elements[e]
        v = dls.values[tri]
        keys = []
        pts = []
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            if (v[i] < 0.0) != (v[(i + 1) % 3] < 0.0):
                key = (min(a, b), max(a, b))
                if key not in zero_cache:
                    zero_cache[key] = _edge_zero(mesh, dls, a, b)
                keys.append(key)
                pts.append(zero_cache[key])
        if len(pts) != 2:
            raise StructuralError(f"element {e} has {len(pts)} sign-change "
                                  "edges; expected exactly 2 after snapping")
        # Interpolant gradient: constant, points into the positive region.
        p0, p1, p2 = mesh.vertices[tri]
        det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
        g1 = np.array([p2[1] - p0[1], p0[0] - p2[0]]) / det
        g2 = np.array([p0[1] - p1[1], p1[0] - p0[0]]) / det
        grad = (v[1] - v[0]) * g1 + (v[2] - v[0]) * g2
        n = grad / np.linalg.norm(grad)
        # Orient the segment so its tangent is the normal rotated by +90deg.
        tangent = np.array([-n[1], n[0]])
        if (pts[1] - pts[0]) @ tangent < 0.0:
            pts = [pts[1], pts[0]]
            keys = [keys[1], keys[0]]
        seg_points[s, 0] = pts[0]
        seg_points[s, 1] = pts[1]
        seg_normal[s] = n
        endpoint_keys.append((keys[0], keys[1]))

    seg_length = np.linalg.norm(seg_points[:, 1] - seg_points[:, 0], axis=1)
    degenerate = seg_length < DEGENERATE_SEGMENT_FACTOR * mesh.h
    if np.any(degenerate):
        raise StructuralError(
            f"degenerate surface segment in elements "
            f"{cut_elements[degenerate].tolist()}")

    incidence: dict[tuple[int, int], list[int]] = {}
    for s, (k0, k1) in enumerate(endpoint_keys):
        incidence.setdefault(k0, []).append(s)
        incidence.setdefault(k1, []).append(s)

    edge_point = []
    edge_segments = []
    edge_conormals = []
    for key in sorted(incidence):
        segs = incidence[key]
        if len(segs) == 1:
            continue  # open chain endpoint (surface clipped by the box)
        if len(segs) > 2:
            raise StructuralError(f"surface edge {key} shared by {len(segs)} "
                                  "segments")
        sa, sb = segs
        if cut_elements[sa] > cut_elements[sb]:
            sa, sb = sb, sa
        point = zero_cache[key]
        conormals = []
        for s in (sa, sb):
            ends = seg_points[s]
            other = ends[1] if np.array_equal(ends[0], point) else ends[0]
            t = point - other
            conormals.append(t / np.linalg.norm(t))
        edge_point.append(point)
        edge_segments.append((sa, sb))
        edge_conormals.append(conormals)

    return SurfaceGeometry(
        element=cut_elements,
        points=seg_points,
        normal=seg_normal,
        length=seg_length,
        edge_point=np.asarray(edge_point, dtype=float).reshape(-1, 2),
        edge_segments=np.asarray(edge_segments, dtype=np.int64).reshape(-1, 2),
        edge_conormals=np.asarray(edge_conormals, dtype=float).reshape(-1, 2, 2),
    )


def build_cut_topology(mesh: BackgroundMesh, dls: DiscreteLevelSet) -> CutTopology:
    """Classification plus surface extraction in one call."""
    topo = classify_elements(mesh, dls)
    surface = extract_surface_segments(mesh, dls)
    return CutTopology(topo.active_bulk, topo.active_surface, topo.bulk_faces,
                       topo.bulk_ghost_faces, topo.surface_faces, surface)


def check_geometry_assumptions(ls: LevelSet, topo: CutTopology,
                               samples_per_segment: int = 8):
    """Sampled sup of |rho| on the discrete surface and of the deviation
    between the exact normal (at the closest point) and the segment normal.

    Returns (sup_dist, sup_normal_dev). Raises ValueError when a sample
    leaves the validity radius of the closest-point map.
    """
    surf = topo.surface
    if surf is None or surf.n_segments == 0:
        raise StructuralError("topology carries no surface segments")
    t = np.linspace(0.0, 1.0, samples_per_segment)
    pts = (surf.points[:, None, 0, :] * (1.0 - t)[None, :, None]
           + surf.points[:, None, 1, :] * t[None, :, None])  # (ns, m, 2)
    rho = ls.rho(pts)
    if np.any(np.abs(rho) >= ls.validity_radius):
        raise ValueError("sampled surface point outside the validity radius "
                         "of the closest-point map")
    sup_dist = float(np.abs(rho).max())
    n_exact = ls.normal(pts)
    dev = n_exact - surf.normal[:, None, :]
    sup_normal_dev = float(np.linalg.norm(dev, axis=-1).max())
    return sup_dist, sup_normal_dev


def surface_length(topo: CutTopology) -> float:
    """Total length of the discrete surface."""
    if topo.surface is None:
        raise StructuralError("topology carries no surface segments")
    return float(topo.surface.length.sum())


def segments_to_text(topo: CutTopology) -> str:
    """Plain-text dump: one ``s x0 y0 x1 y1`` line per segment."""
    if topo.surface is None:
        raise StructuralError("topology carries no surface segments")
    lines = [f"s {float(p[0, 0])!r} {float(p[0, 1])!r} "
             f"{float(p[1, 0])!r} {float(p[1, 1])!r}"
             for p in topo.surface.points]
    return "\n".join(lines) + "\n"
