import numpy as np
import pytest
import scipy.sparse as sp

from cutdg.exceptions import DegenerateMatrixError, SolverError
from cutdg.forms import AssembledSystem, StabilizationParams, assemble_system
from cutdg.levelset import build_cut_topology, circle_levelset, \
    interpolate_levelset
from cutdg.manufactured import build_circle_problem
from cutdg.mesh import build_structured_mesh
from cutdg.solver import (condition_number, lanczos_largest, pcg,
                          rescaled_matrix, smallest_magnitude, solve)
from cutdg.space import build_spaces

BOX = ((-1.1, -1.1), (1.1, 1.1))
PARAMS = StabilizationParams()


def _system(n=8, params=PARAMS):
    mesh = build_structured_mesh(BOX, n)
    problem = build_circle_problem(params.c_bulk, params.c_surf)
    dls = interpolate_levelset(problem.geometry, mesh)
    topo = build_cut_topology(mesh, dls)
    dofmap = build_spaces(mesh, topo)
    return assemble_system(mesh, dls, topo, dofmap, problem, params)


def _wrap(matrix, n_bulk, h=0.1):
    class _Map:
        pass
    m = _Map()
    m.ndof = matrix.shape[0]
    m.n_bulk = n_bulk
    return AssembledSystem(matrix=matrix.tocsr(),
                           rhs=np.zeros(matrix.shape[0]), dofmap=m,
                           params=PARAMS, h=h)


def test_solve_identity_and_diagonal():
    eye = sp.identity(5, format="csr")
    b = np.arange(1.0, 6.0)
    assert solve(_wrap(eye, 5)) is not None
    sysm = _wrap(eye, 5)
    sysm = AssembledSystem(matrix=eye, rhs=b, dofmap=sysm.dofmap,
                           params=PARAMS, h=0.1)
    assert solve(sysm) == pytest.approx(b)
    diag = sp.diags([1.0, 2.0, 4.0]).tocsr()
    sys2 = AssembledSystem(matrix=diag, rhs=np.array([1.0, 2.0, 4.0]),
                           dofmap=sysm.dofmap, params=PARAMS, h=0.1)
    assert solve(sys2) == pytest.approx(np.ones(3))


def test_solve_residual_on_assembled_system():
    system = _system(n=32)
    u = solve(system, rel_tol=1e-10)
    res = np.linalg.norm(system.matrix @ u - system.rhs)
    assert res <= 1e-10 * np.linalg.norm(system.rhs)


def test_solver_error_on_singular_system():
    mat = sp.diags([1.0, 1.0, 0.0]).tocsr()
    bad = AssembledSystem(matrix=mat, rhs=np.array([1.0, 1.0, 1.0]),
                          dofmap=None, params=PARAMS, h=0.1)
    with pytest.raises(SolverError):
        solve(bad)


def test_pcg_matches_direct_solution():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((40, 40))
    spd = sp.csr_matrix(a @ a.T + 40 * np.eye(40))
    b = rng.standard_normal(40)
    x, iters, converged = pcg(spd, b, rel_tol=1e-12)
    assert converged and iters <= 800
    assert x == pytest.approx(np.linalg.solve(spd.toarray(), b), abs=1e-8)


def test_rescaled_matrix_block_scaling():
    system = _system(n=6)
    nb = system.dofmap.n_bulk
    h = system.h
    resc = rescaled_matrix(system)
    a = system.matrix.toarray()
    r = resc.toarray()
    assert r[:nb, :nb] == pytest.approx(a[:nb, :nb], rel=1e-14)
    assert r[nb:, nb:] == pytest.approx(np.sqrt(h) * a[nb:, nb:], rel=1e-14)
    assert r[:nb, nb:] == pytest.approx(h ** 0.25 * a[:nb, nb:], rel=1e-14)
    assert np.abs(r - r.T).max() <= 1e-12 * np.abs(r).max()


def test_one_sided_rescaling_has_same_spectrum():
    system = _system(n=6)
    sym = rescaled_matrix(system, "symmetric").toarray()
    left = rescaled_matrix(system, "left").toarray()
    es = np.sort(np.linalg.eigvalsh(sym))
    el = np.sort(np.linalg.eigvals(left).real)
    assert es == pytest.approx(el, rel=1e-8, abs=1e-10 * np.abs(es).max())


def test_condition_number_examples():
    diag = sp.diags([1.0, 2.0, 4.0]).tocsr()
    kappa, lmin, lmax = condition_number(diag)
    assert (kappa, lmin, lmax) == pytest.approx((4.0, 1.0, 4.0))
    with_zero = sp.diags([0.0, 1.0, 10.0]).tocsr()
    kappa, lmin, lmax = condition_number(with_zero)
    assert kappa == pytest.approx(10.0)
    zero = sp.csr_matrix((3, 3))
    zero.setdiag([0.0, 0.0, 0.0])
    with pytest.raises(DegenerateMatrixError):
        condition_number(zero.tocsr())


def test_iterative_matches_dense_condition_number():
    system = _system(n=8)
    resc = rescaled_matrix(system)
    dense_kappa, _, _ = condition_number(resc)
    iter_kappa, _, _ = condition_number(resc, dense_limit=0)
    assert iter_kappa == pytest.approx(dense_kappa, rel=0.05)


def test_lanczos_and_inverse_iteration_on_known_spectrum():
    rng = np.random.default_rng(12)
    q, _ = np.linalg.qr(rng.standard_normal((60, 60)))
    eigs = np.linspace(0.5, 30.0, 60)
    m = sp.csr_matrix(q @ np.diag(eigs) @ q.T)
    assert lanczos_largest(m) == pytest.approx(30.0, rel=1e-6)
    assert smallest_magnitude(m) == pytest.approx(0.5, rel=1e-6)


def test_condition_scaling_smoke():
    kappas, hs = [], []
    for n in (8, 16, 32):
        system = _system(n=n)
        kappa, _, _ = condition_number(rescaled_matrix(system))
        kappas.append(kappa)
        hs.append(system.h)
    slope = np.polyfit(np.log(hs), np.log(kappas), 1)[0]
    assert -2.5 <= slope <= -1.6


def test_cg_iterations_robust_over_positions():
    mesh = build_structured_mesh(BOX, 8)
    cell = np.asarray(mesh.cell)
    params = PARAMS
    iters = []
    for delta in np.linspace(0.0, 1.0, 21):
        ls = circle_levelset(center=delta * cell)
        problem = build_circle_problem()
        problem = type(problem)(**{**problem.__dict__, "geometry": ls})
        dls = interpolate_levelset(ls, mesh)
        topo = build_cut_topology(mesh, dls)
        dofmap = build_spaces(mesh, topo)
        system = assemble_system(mesh, dls, topo, dofmap, problem, params)
        _, k, converged = pcg(system.matrix, system.rhs, rel_tol=1e-10)
        assert converged
        iters.append(k)
    assert max(iters) / min(iters) <= 3.0
