"""Linear solve, rescaling and condition-number estimation.

Sparse matrices are scipy CSR throughout. The solver is a Jacobi
preconditioned conjugate gradient with a dense factorization fallback
for moderate problem sizes. Condition numbers of the rescaled system
use a dense symmetric eigensolve at desk scale and a hand-rolled
Lanczos / inverse-iteration pair beyond it, which also serves as the
independent cross-check of the dense route.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import DegenerateMatrixError, SolverError
from .forms import AssembledSystem

DENSE_FALLBACK_LIMIT = 20000
DENSE_EIG_LIMIT = 6000


def pcg(matrix: sp.spmatrix, rhs: np.ndarray, rel_tol: float = 1e-10,
        max_iter: int | None = None):
    """Jacobi-preconditioned conjugate gradient.

    Returns (x, iterations, converged); converged means the 2-norm
    residual dropped below rel_tol * ||rhs||.
    """
    n = rhs.shape[0]
    if max_iter is None:
        max_iter = 20 * n
    diag = matrix.diagonal()
    # zero diagonal entries (possible under ablation) fall back to the
    # identity; the breakdown check below handles indefiniteness
    inv_diag = 1.0 / np.where(diag == 0.0, 1.0, diag)
    x = np.zeros(n)
    r = rhs.copy()
    target = rel_tol * np.linalg.norm(rhs)
    if np.linalg.norm(r) <= target:
        return x, 0, True
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for k in range(1, max_iter + 1):
        ap = matrix @ p
        pap = p @ ap
        if pap <= 0.0 or not np.isfinite(pap):
            return x, k, False  # breakdown: matrix not positive definite
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        if np.linalg.norm(r) <= target:
            return x, k, True
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, max_iter, False


def solve(system: AssembledSystem, rel_tol: float = 1e-10,
          max_iter: int | None = None,
          dense_limit: int = DENSE_FALLBACK_LIMIT) -> np.ndarray:
    """Solve the assembled system to a relative residual of rel_tol.

    Tries preconditioned CG first; on non-convergence falls back to a
    dense factorization when the system is small enough. Raises
    SolverError when neither route reaches the tolerance (expected when
    the stabilization is ablated).
    """
    a, b = system.matrix, system.rhs
    x, _, converged = pcg(a, b, rel_tol=rel_tol, max_iter=max_iter)
    if converged:
        return x
    n = b.shape[0]
    if n <= dense_limit:
        try:
            with warnings.catch_warnings():
                # the residual check below decides whether the fallback is
                # acceptable, so the ill-conditioning warning is redundant
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                x = scipy.linalg.solve(a.toarray(), b, assume_a="sym")
        except scipy.linalg.LinAlgError as exc:
            raise SolverError(f"dense fallback failed: {exc}") from exc
        rel_res = np.linalg.norm(a @ x - b) / np.linalg.norm(b)
        if rel_res <= max(rel_tol, 1e-8):
            return x
        raise SolverError(f"dense fallback residual {rel_res:.3e} above "
                          "tolerance; system is effectively singular")
    raise SolverError("conjugate gradient did not converge and the system "
                      "is too large for the dense fallback")


def rescaled_matrix(system: AssembledSystem,
                    scaling: str = "symmetric") -> sp.csr_matrix:
    """Surface-block rescaling that balances the bulk and surface norms.

    ``symmetric``: D A D with D = diag(1 on bulk dofs, h^(1/4) on surface
    dofs), so surface-surface entries scale by h^(1/2) and coupling
    entries by h^(1/4). ``left``: the one-sided variant diag(1, h^(1/2)) A;
    it is similar to the symmetric one (D^-1 (D^2 A) D = D A D) and has
    the same spectrum but is not symmetric.
    """
    n = system.dofmap.ndof
    nb = system.dofmap.n_bulk
    if scaling == "symmetric":
        d = np.ones(n)
        d[nb:] = system.h ** 0.25
        dm = sp.diags(d)
        return (dm @ system.matrix @ dm).tocsr()
    if scaling == "left":
        d = np.ones(n)
        d[nb:] = system.h ** 0.5
        return (sp.diags(d) @ system.matrix).tocsr()
    raise ValueError(f"unknown scaling {scaling!r}")


def lanczos_largest(matrix: sp.spmatrix, max_iter: int = 200,
                    tol: float = 1e-10, seed: int = 0) -> float:
    """Largest-magnitude eigenvalue of a symmetric matrix via Lanczos
    with full reorthogonalization."""
    n = matrix.shape[0]
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    basis = [q]
    alphas, betas = [], []
    previous = None
    for k in range(min(max_iter, n)):
        u = matrix @ q
        alpha = q @ u
        u -= alpha * q
        if betas:
            u -= betas[-1] * basis[-2]
        # full reorthogonalization against all Lanczos vectors
        qmat = np.column_stack(basis)
        u -= qmat @ (qmat.T @ u)
        alphas.append(alpha)
        beta = np.linalg.norm(u)
        t = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
        ext = float(np.max(np.abs(np.linalg.eigvalsh(t))))
        if previous is not None and abs(ext - previous) <= tol * abs(ext):
            return ext
        previous = ext
        if beta == 0.0:
            return ext
        betas.append(beta)
        q = u / beta
        basis.append(q)
    return previous


def smallest_magnitude(matrix: sp.spmatrix, max_iter: int = 200,
                       tol: float = 1e-10, seed: int = 1) -> float:
    """Smallest-magnitude eigenvalue via shift-free inverse iteration
    (one sparse LU factorization, then repeated solves)."""
    n = matrix.shape[0]
    try:
        lu = spla.splu(matrix.tocsc())
    except RuntimeError as exc:
        raise DegenerateMatrixError(f"matrix is numerically singular: {exc}") \
            from exc
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    previous = None
    for _ in range(max_iter):
        y = lu.solve(x)
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0.0:
            raise DegenerateMatrixError("inverse iteration broke down")
        x = y / ny
        lam = x @ (matrix @ x)
        if previous is not None and abs(lam - previous) <= tol * abs(lam):
            return abs(lam)
        previous = lam
    return abs(previous)


def condition_number(matrix: sp.spmatrix, zero_threshold: float = 1e-12,
                     dense_limit: int = DENSE_EIG_LIMIT):
    """Spectral condition number: largest over smallest nonzero
    eigenvalue magnitude of a symmetric matrix.

    Eigenvalues with |lambda| <= zero_threshold * |lambda|_max count as
    zero. Dense symmetric eigensolve up to ``dense_limit`` unknowns,
    Lanczos plus inverse iteration beyond (positive definite matrices
    only on that path). Returns (kappa, lambda_min_nonzero, lambda_max).
    """
    n = matrix.shape[0]
    if n <= dense_limit:
        eigs = np.abs(scipy.linalg.eigvalsh(np.asarray(matrix.todense())))
        lam_max = float(eigs.max())
        nonzero = eigs[eigs > zero_threshold * lam_max]
        if nonzero.size == 0:
            raise DegenerateMatrixError("all eigenvalues fall below the "
                                        "zero threshold")
        lam_min = float(nonzero.min())
    else:
        lam_max = lanczos_largest(matrix)
        lam_min = smallest_magnitude(matrix)
        if lam_min <= zero_threshold * lam_max:
            raise DegenerateMatrixError("smallest eigenvalue estimate falls "
                                        "below the zero threshold")
    return lam_max / lam_min, lam_min, lam_max


def generalized_eigvals(a: sp.spmatrix, b: sp.spmatrix,
                        shift_rel: float = 1e-12) -> np.ndarray:
    """Eigenvalues of the dense symmetric-definite pencil (A, B),
    ascending. B gets a tiny diagonal shift when its Cholesky fails."""
    ad = np.asarray(a.todense())
    bd = np.asarray(b.todense())
    try:
        return scipy.linalg.eigh(ad, bd, eigvals_only=True)
    except scipy.linalg.LinAlgError:
        shift = shift_rel * max(np.abs(bd).max(), 1.0)
        return scipy.linalg.eigh(ad, bd + shift * np.eye(bd.shape[0]),
                                 eigvals_only=True)


def deflated_generalized_extremes(a: sp.spmatrix, b: sp.spmatrix,
                                  rel_cut: float = 1e-10):
    """Smallest and largest generalized eigenvalue of (A, B) after
    deflating the numerical null space of the positive semidefinite B."""
    bd = np.asarray(b.todense())
    w, v = np.linalg.eigh(bd)
    keep = w > rel_cut * w.max()
    if not np.any(keep):
        raise DegenerateMatrixError("right-hand Gram matrix is numerically "
                                    "zero")
    basis = v[:, keep] / np.sqrt(w[keep])[None, :]
    core = basis.T @ (np.asarray(a.todense()) @ basis)
    eigs = np.linalg.eigvalsh(core)
    return float(eigs.min()), float(eigs.max())


def deflated_generalized_max(a: sp.spmatrix, b: sp.spmatrix,
                             rel_cut: float = 1e-10) -> float:
    """Largest generalized eigenvalue of (A, B) on the deflated pencil."""
    return deflated_generalized_extremes(a, b, rel_cut)[1]
