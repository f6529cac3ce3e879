"""Quadrature rules on full and cut entities.

All integrands assembled in this package are products of piecewise-linear
traces and gradients on straight geometry, so the default exactness
degree is 2 everywhere. Error norms use degree 4. Rules carry physical
points and positive weights summing to the measure of their domain;
empty rules (zero points) represent cut parts of zero measure.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import StructuralError

# Symmetric triangle rules with positive weights only: barycentric point
# coordinates and weights normalized to sum to 1. Odd degrees without a
# positive rule of their own fall through to the next table entry.
_TRI_TABLES = {
    1: (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])),
    2: (np.array([[2 / 3, 1 / 6, 1 / 6],
                  [1 / 6, 2 / 3, 1 / 6],
                  [1 / 6, 1 / 6, 2 / 3]]),
        np.array([1 / 3, 1 / 3, 1 / 3])),
    4: (None, None),  # filled below
    5: (None, None),
}


def _sym3(a):
    b = 1.0 - 2.0 * a
    return np.array([[b, a, a], [a, b, a], [a, a, b]])


_a1, _w1 = 0.445948490915965, 0.223381589678011
_a2, _w2 = 0.091576213509771, 0.109951743655322
_TRI_TABLES[4] = (np.vstack([_sym3(_a1), _sym3(_a2)]),
                  np.array([_w1] * 3 + [_w2] * 3))
_b1, _v1 = 0.470142064105115, 0.132394152788506
_b2, _v2 = 0.101286507323456, 0.125939180544827
_TRI_TABLES[5] = (np.vstack([np.array([[1 / 3, 1 / 3, 1 / 3]]),
                             _sym3(_b1), _sym3(_b2)]),
                  np.array([9 / 40] + [_v1] * 3 + [_v2] * 3))

_DEGREE_TO_TABLE = {0: 1, 1: 1, 2: 2, 3: 4, 4: 4, 5: 5}


@dataclass(frozen=True)
class QuadratureRule:
    """Physical quadrature points, positive weights and a domain tag."""

    points: np.ndarray   # (m, 2)
    weights: np.ndarray  # (m,)
    domain: str

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def integrate(self, f) -> float:
        if self.weights.size == 0:
            return 0.0
        return float(self.weights @ np.asarray(f(self.points), dtype=float))


def triangle_reference_rule(degree: int):
    """Barycentric points and weights (summing to 1/2) exact to ``degree``."""
    try:
        bary, w = _TRI_TABLES[_DEGREE_TO_TABLE[degree]]
    except KeyError:
        raise ValueError(f"no triangle rule tabulated for degree {degree}")
    return bary, 0.5 * w


@lru_cache(maxsize=None)
def _gauss_unit(degree: int):
    """Gauss-Legendre nodes/weights on [0, 1] exact to ``degree``."""
    npts = max(1, (degree + 2) // 2)
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def _empty(domain: str) -> QuadratureRule:
    return QuadratureRule(np.empty((0, 2)), np.empty(0), domain)


def _map_triangles(tris: np.ndarray, degree: int, domain: str) -> QuadratureRule:
    """Map the reference rule onto a batch of triangles (k, 3, 2)."""
    bary, wref = triangle_reference_rule(degree)
    pts = np.einsum("mb,kbd->kmd", bary, tris).reshape(-1, 2)
    d1 = tris[:, 1] - tris[:, 0]
    d2 = tris[:, 2] - tris[:, 0]
    areas = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    weights = (wref[None, :] * (areas[:, None] / 0.5)).reshape(-1)
    return QuadratureRule(pts, weights, domain)


def full_element_rule(tri, degree: int = 2) -> QuadratureRule:
    """Symmetric rule on a full triangle (3, 2), exact to ``degree``."""
    tri = np.asarray(tri, dtype=float)
    return _map_triangles(tri[None, :, :], degree, "fullElement")


def _segment_rule(p0, p1, degree: int, domain: str) -> QuadratureRule:
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    t, w = _gauss_unit(degree)
    pts = p0[None, :] * (1.0 - t)[:, None] + p1[None, :] * t[:, None]
    length = float(np.linalg.norm(p1 - p0))
    return QuadratureRule(pts, w * length, domain)


def full_face_rule(p0, p1, degree: int = 2) -> QuadratureRule:
    """Gauss rule on the full face from p0 to p1."""
    return _segment_rule(p0, p1, degree, "fullFace")


def surface_segment_rule(p0, p1, degree: int = 2) -> QuadratureRule:
    """Gauss rule on a surface segment; errors on zero length."""
    if not np.linalg.norm(np.asarray(p1, dtype=float)
                          - np.asarray(p0, dtype=float)) > 0.0:
        raise StructuralError("degenerate surface segment")
    return _segment_rule(p0, p1, degree, "surfaceSegment")


def cut_face_rule(p0, p1, v0: float, v1: float, degree: int = 2) -> QuadratureRule:
    """Gauss rule on the sub-segment of face (p0, p1) where the linear
    interpolant of the endpoint values (v0, v1) is negative. Empty rule
    when the face lies entirely in the positive region."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    if v0 < 0.0 and v1 < 0.0:
        a, b = p0, p1
    elif v0 >= 0.0 and v1 >= 0.0:
        return _empty("faceCut")
    else:
        s = v0 / (v0 - v1)
        zero = p0 + s * (p1 - p0)
        a, b = (p0, zero) if v0 < 0.0 else (zero, p1)
    return _segment_rule(a, b, degree, "faceCut")


def point_rule(x) -> QuadratureRule:
    """Measure-1 rule at a single surface point."""
    return QuadratureRule(np.asarray(x, dtype=float).reshape(1, 2),
                          np.array([1.0]), "surfacePoint")


def negative_polygon(tri, values) -> np.ndarray:
    """Vertices (CCW) of the sub-polygon of ``tri`` where the linear
    interpolant of ``values`` is negative. Empty array if none."""
    tri = np.asarray(tri, dtype=float)
    values = np.asarray(values, dtype=float)
    poly = []
    for i in range(3):
        j = (i + 1) % 3
        if values[i] < 0.0:
            poly.append(tri[i])
        if (values[i] < 0.0) != (values[j] < 0.0):
            t = values[i] / (values[i] - values[j])
            poly.append(tri[i] + t * (tri[j] - tri[i]))
    return np.asarray(poly, dtype=float).reshape(-1, 2)


def clip_element_rule(tri, values, degree: int = 2) -> QuadratureRule:
    """Rule on the part of ``tri`` where the interpolant of the vertex
    ``values`` is negative. The sub-polygon (triangle or quadrilateral)
    is fanned into at most two triangles."""
    poly = negative_polygon(tri, values)
    if poly.shape[0] == 0:
        return _empty("bulkCut")
    if poly.shape[0] == 3:
        tris = poly[None, :, :]
    else:  # quadrilateral
        tris = np.stack([poly[[0, 1, 2]], poly[[0, 2, 3]]])
    rule = _map_triangles(tris, degree, "bulkCut")
    return rule
