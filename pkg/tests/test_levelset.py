import numpy as np
import pytest

from cutdg.exceptions import ConfigurationError
from cutdg.levelset import (DiscreteLevelSet, build_cut_topology,
                            check_geometry_assumptions, circle_levelset,
                            classify_elements, closest_point_circle,
                            extract_surface_segments, interpolate_levelset,
                            line_levelset, segments_to_text, surface_length)
from cutdg.mesh import build_structured_mesh, refine_uniform

BOX = ((-1.1, -1.1), (1.1, 1.1))


def test_circle_distance_values():
    ls = circle_levelset()
    assert ls.rho(np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert ls.rho(np.array([0.0, 0.0])) == pytest.approx(-1.0)


def test_closest_point_circle():
    assert closest_point_circle(np.array([2.0, 0.0])) == pytest.approx([1.0, 0.0])
    assert closest_point_circle(np.array([0.0, 0.5])) == pytest.approx([0.0, 1.0])
    rng = np.random.default_rng(3)
    pts = rng.uniform(-2, 2, size=(64, 2))
    pts = pts[np.linalg.norm(pts, axis=1) > 1e-3]
    proj = closest_point_circle(pts)
    assert np.linalg.norm(proj, axis=1) == pytest.approx(
        np.ones(len(proj)), abs=1e-12)
    with pytest.raises(ValueError):
        closest_point_circle(np.array([0.0, 0.0]))


def test_closest_point_properties_of_levelset():
    ls = circle_levelset()
    rng = np.random.default_rng(11)
    pts = rng.uniform(-1.5, 1.5, size=(200, 2))
    pts = pts[np.abs(ls.rho(pts)) < 0.9]
    proj = ls.closest_point(pts)
    assert np.max(np.abs(ls.rho(proj))) < 1e-12
    assert np.linalg.norm(pts - proj, axis=1) == pytest.approx(
        np.abs(ls.rho(pts)), abs=1e-12)


def test_interpolation_and_snapping():
    mesh = build_structured_mesh(((0.0, 0.0), (2.0, 2.0)), 2)
    ls = circle_levelset()
    dls = interpolate_levelset(ls, mesh)
    vid = {tuple(np.round(v, 12)): i for i, v in enumerate(mesh.vertices)}
    assert dls.values[vid[(2.0, 0.0)]] == pytest.approx(1.0)
    assert dls.values[vid[(0.0, 0.0)]] == pytest.approx(-1.0)
    # vertex (1, 0) lies exactly on the circle: snapped to -snap_tol
    assert dls.values[vid[(1.0, 0.0)]] == -dls.snap_tol
    assert dls.snap_tol == pytest.approx(1e-10 * mesh.h)
    assert np.all(dls.values != 0.0)


def test_classification_sign_patterns():
    mesh = build_structured_mesh(((0.0, 0.0), (1.0, 1.0)), 1)
    # element 0 has vertices 0, 1, 2; element 1 has vertices 1, 3, 2
    cases = [
        (np.array([-1.0, -1.0, -1.0, -1.0]), {0, 1}, set()),
        (np.array([-1.0, 1.0, 1.0, 1.0]), {0}, {0}),
        (np.array([1.0, 1.0, 1.0, 1.0]), None, None),  # empty: error
        (np.array([-1.0, -1.0, -1.0, 1.0]), {0, 1}, {1}),
    ]
    for values, bulk, cut in cases:
        dls = DiscreteLevelSet(values=values, snap_tol=1e-10)
        if bulk is None:
            with pytest.raises(ConfigurationError):
                classify_elements(mesh, dls)
            continue
        topo = classify_elements(mesh, dls)
        assert set(topo.active_bulk) == bulk
        assert set(topo.active_surface) == cut
        assert set(topo.active_surface) <= set(topo.active_bulk)


def test_face_sets_on_circle():
    mesh = build_structured_mesh(BOX, 8)
    dls = interpolate_levelset(circle_levelset(), mesh)
    topo = classify_elements(mesh, dls)
    bulk_set = set(topo.active_bulk)
    cut_set = set(topo.active_surface)
    for f in topo.bulk_faces:
        assert set(mesh.face_elements[f]) <= bulk_set
    for f in topo.bulk_ghost_faces:
        assert set(mesh.face_elements[f]) <= bulk_set
        assert set(mesh.face_elements[f]) & cut_set
    for f in topo.surface_faces:
        assert set(mesh.face_elements[f]) <= cut_set
    assert set(topo.bulk_ghost_faces) <= set(topo.bulk_faces)
    assert set(topo.surface_faces) <= set(topo.bulk_faces)


def test_single_element_segment_oracle():
    # triangle (0,0), (1,0), (0,1) with values (-1, 1, 1): the zeros sit at
    # the edge midpoints (0.5, 0) and (0, 0.5)
    mesh = build_structured_mesh(((0.0, 0.0), (1.0, 1.0)), 1)
    values = np.array([-1.0, 1.0, 1.0, 3.0])
    dls = DiscreteLevelSet(values=values, snap_tol=1e-10)
    surf = extract_surface_segments(mesh, dls)
    assert surf.n_segments == 1
    pts = {tuple(p) for p in surf.points[0]}
    assert pts == {(0.5, 0.0), (0.0, 0.5)}
    assert surf.length[0] == pytest.approx(np.sqrt(2.0) / 2.0)
    assert surf.normal[0] == pytest.approx(np.ones(2) / np.sqrt(2.0))
    assert surf.normal[0] @ (np.array([1.0, 1.0])) > 0  # towards positive side


def test_circle_chain_is_closed_and_watertight():
    mesh = refine_uniform(build_structured_mesh(BOX, 8))
    dls = interpolate_levelset(circle_levelset(), mesh)
    surf = extract_surface_segments(mesh, dls)
    # closed chain: every endpoint is shared by exactly two segments
    assert surf.n_edges == surf.n_segments
    counts = np.zeros(surf.n_segments, dtype=int)
    for sa, sb in surf.edge_segments:
        counts[sa] += 1
        counts[sb] += 1
    assert np.all(counts == 2)
    # shared endpoints are bit-identical copies of the segment endpoints
    for k in range(surf.n_edges):
        for s in surf.edge_segments[k]:
            match = [np.array_equal(surf.points[s, e], surf.edge_point[k])
                     for e in range(2)]
            assert any(match)
    assert np.all(surf.length > 0.0)
    assert np.linalg.norm(surf.normal, axis=1) == pytest.approx(
        np.ones(surf.n_segments), abs=1e-14)
    # normals are perpendicular to their segments
    tangents = surf.points[:, 1] - surf.points[:, 0]
    dots = np.einsum("sd,sd->s", tangents, surf.normal)
    assert np.max(np.abs(dots)) < 1e-14
    # co-normals are unit and tangent to their segments
    for k in range(surf.n_edges):
        for side, s in enumerate(surf.edge_segments[k]):
            c = surf.edge_conormals[k, side]
            assert np.linalg.norm(c) == pytest.approx(1.0, abs=1e-14)
            t = tangents[s] / np.linalg.norm(tangents[s])
            assert abs(abs(c @ t) - 1.0) < 1e-12


def test_translation_sweep_never_breaks_extraction():
    mesh = build_structured_mesh(BOX, 8)
    cell = np.asarray(mesh.cell)
    for delta in np.linspace(0.0, 1.0, 51):
        ls = circle_levelset(center=delta * cell)
        dls = interpolate_levelset(ls, mesh)
        topo = build_cut_topology(mesh, dls)
        surf = topo.surface
        assert surf.n_segments > 0
        assert np.all(surf.length > 0.0)
        assert np.linalg.norm(surf.normal, axis=1) == pytest.approx(
            np.ones(surf.n_segments), abs=1e-12)


def test_geometry_assumption_bounds_and_rates():
    ls = circle_levelset()
    mesh = build_structured_mesh(BOX, 8)
    sups, sdevs, hs, lengths = [], [], [], []
    for _ in range(4):
        dls = interpolate_levelset(ls, mesh)
        topo = build_cut_topology(mesh, dls)
        sup_dist, sup_dev = check_geometry_assumptions(ls, topo)
        # local interpolation-error bound at the sampled points
        assert sup_dist <= mesh.h ** 2 / 2.0
        sups.append(sup_dist)
        sdevs.append(sup_dev)
        hs.append(mesh.h)
        lengths.append(surface_length(topo))
        mesh = refine_uniform(mesh)
    slope = np.polyfit(np.log(hs), np.log(sups), 1)[0]
    assert slope >= 1.8
    dev_slope = np.polyfit(np.log(hs), np.log(sdevs), 1)[0]
    assert dev_slope >= 0.8
    length_err = np.abs(2.0 * np.pi - np.asarray(lengths))
    assert np.polyfit(np.log(hs), np.log(length_err), 1)[0] >= 1.8


def test_exact_line_levelset_is_reproduced():
    ls = line_levelset((0.0, 1.0), 0.031)
    mesh = build_structured_mesh(BOX, 9)
    for _ in range(3):
        dls = interpolate_levelset(ls, mesh)
        topo = build_cut_topology(mesh, dls)
        sup_dist, sup_dev = check_geometry_assumptions(ls, topo)
        assert sup_dist < 1e-13
        assert sup_dev < 1e-13
        mesh = refine_uniform(mesh)


def test_validity_radius_violation_raises():
    mesh = build_structured_mesh(BOX, 8)
    ls = circle_levelset()
    dls = interpolate_levelset(ls, mesh)
    topo = build_cut_topology(mesh, dls)
    tiny = circle_levelset()
    tiny = type(tiny)(rho=tiny.rho, closest_point=tiny.closest_point,
                      normal=tiny.normal, validity_radius=1e-9)
    with pytest.raises(ValueError):
        check_geometry_assumptions(tiny, topo)


def test_segment_dump_format():
    mesh = build_structured_mesh(BOX, 8)
    dls = interpolate_levelset(circle_levelset(), mesh)
    topo = build_cut_topology(mesh, dls)
    lines = segments_to_text(topo).strip().splitlines()
    assert len(lines) == topo.surface.n_segments
    parts = lines[0].split()
    assert parts[0] == "s" and len(parts) == 5
