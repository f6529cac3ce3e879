"""Batch experiment drivers: convergence/EOC study with ghost-penalty
ablation, condition-number sweep over surface positions, geometry
approximation checks and the stability property suite. Every study is
deterministic for fixed inputs and can be dumped to CSV.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateMatrixError, SolverError
from .forms import (AssembledSystem, StabilizationParams, assemble_bulk_form,
                    assemble_coupling_form, assemble_surface_form,
                    assemble_system, energy_gram, ghost_penalty_pieces,
                    gradient_gram, surface_element_mass_gram,
                    surface_tangential_gram, surface_trace_load)
from .levelset import (build_cut_topology, check_geometry_assumptions,
                       circle_levelset, interpolate_levelset, surface_length)
from .manufactured import build_circle_problem, compute_errors, eoc
from .mesh import build_structured_mesh, refine_uniform
from .solver import (condition_number, deflated_generalized_extremes,
                     rescaled_matrix, solve)
from .space import build_spaces

DEFAULT_BOX = ((-1.1, -1.1), (1.1, 1.1))
# The property suite translates the circle by up to one full grid cell;
# this wider box keeps the translated surface strictly inside the mesh at
# every sweep position, which is the regime the stability statements
# address (the tight default box lets the surface leave the mesh for
# large shifts, an artifact of the translation construction).
PROPERTY_BOX = ((-1.4, -1.4), (1.4, 1.4))
DEFAULT_N0 = 8
SENTINEL_KAPPA = 1e300
SENTINEL_ERROR = 1e300
SWEEP_CONFIGS = ("full", "no-surface", "no-bulk", "none")
PROPERTY_CONFIGS = ("full", "no-bulk-ghost", "no-surface-ghost")

CONVERGENCE_HEADER = ("level,h,err_h1_bulk,eoc_h1_bulk,err_l2_bulk,"
                      "eoc_l2_bulk,err_h1_surf,eoc_h1_surf,err_l2_surf,"
                      "eoc_l2_surf")
CONDITION_HEADER = "delta,kappa,lambda_min,lambda_max,config"
GEOMETRY_HEADER = "level,sup_dist,sup_normal_dev"
PROPERTIES_HEADER = "name,constant,delta,pass"


def mesh_at_level(level: int, n0: int = DEFAULT_N0, box=DEFAULT_BOX):
    """Background mesh at refinement level ``level``, built by uniformly
    refining the n0-by-n0 starting mesh."""
    mesh = build_structured_mesh(box, n0)
    for _ in range(level):
        mesh = refine_uniform(mesh)
    return mesh


def ablated_params(params: StabilizationParams) -> StabilizationParams:
    """Ghost-penalty ablation of the convergence study: the value-jump
    ghost weight of the bulk stays (it mirrors the DG jump penalty), all
    other ghost weights are switched off."""
    return StabilizationParams(c_bulk=params.c_bulk, c_surf=params.c_surf,
                               gamma_bulk=params.gamma_bulk,
                               gamma_surf=params.gamma_surf,
                               mu_bulk=params.mu_bulk, mu_surf=0.0,
                               tau_bulk=0.0, tau_surf=0.0)


def sweep_weights(params: StabilizationParams, config: str):
    """(mu_bulk, tau_bulk, mu_surf, tau_surf) of a sweep configuration."""
    if config == "full":
        return params.mu_bulk, params.tau_bulk, params.mu_surf, params.tau_surf
    if config == "no-surface":
        return params.mu_bulk, params.tau_bulk, 0.0, 0.0
    if config == "no-bulk":
        return 0.0, 0.0, params.mu_surf, params.tau_surf
    if config == "none":
        return 0.0, 0.0, 0.0, 0.0
    raise ValueError(f"unknown sweep configuration {config!r}")


def _fmt(x) -> str:
    return f"{float(x):.16e}"


@dataclass
class StudyReport:
    """Collected study rows plus side information that does not go into
    the CSV files (solver failures, surface lengths, raw constants)."""

    convergence_rows: list = field(default_factory=list)
    condition_rows: list = field(default_factory=list)
    geometry_rows: list = field(default_factory=list)
    property_rows: list = field(default_factory=list)
    solver_failures: list = field(default_factory=list)
    geometry_lengths: list = field(default_factory=list)
    geometry_h: list = field(default_factory=list)
    property_summary: dict = field(default_factory=dict)

    def convergence_csv(self) -> str:
        lines = [CONVERGENCE_HEADER]
        for r in self.convergence_rows:
            eocs = ["" if e is None else _fmt(e) for e in r["eocs"]]
            errs = [_fmt(e) for e in r["errors"]]
            cells = [str(r["level"]), _fmt(r["h"])]
            for err, ec in zip(errs, eocs):
                cells += [err, ec]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def condition_csv(self) -> str:
        lines = [CONDITION_HEADER]
        for r in self.condition_rows:
            lines.append(",".join([_fmt(r["delta"]), _fmt(r["kappa"]),
                                   _fmt(r["lambda_min"]), _fmt(r["lambda_max"]),
                                   r["config"]]))
        return "\n".join(lines) + "\n"

    def geometry_csv(self) -> str:
        lines = [GEOMETRY_HEADER]
        for r in self.geometry_rows:
            lines.append(",".join([str(r["level"]), _fmt(r["sup_dist"]),
                                   _fmt(r["sup_normal_dev"])]))
        return "\n".join(lines) + "\n"

    def properties_csv(self) -> str:
        lines = [PROPERTIES_HEADER]
        for r in self.property_rows:
            lines.append(",".join([r["name"], _fmt(r["constant"]),
                                   _fmt(r["delta"]), str(int(r["pass"]))]))
        return "\n".join(lines) + "\n"

    def write(self, outdir: str) -> list:
        os.makedirs(outdir, exist_ok=True)
        written = []
        sections = [("convergence.csv", self.convergence_rows,
                     self.convergence_csv),
                    ("condition.csv", self.condition_rows, self.condition_csv),
                    ("geometry.csv", self.geometry_rows, self.geometry_csv),
                    ("properties.csv", self.property_rows, self.properties_csv)]
        for name, rows, render in sections:
            if rows:
                path = os.path.join(outdir, name)
                with open(path, "w") as handle:
                    handle.write(render())
                written.append(path)
        return written


def run_convergence(levels: int = 5, n0: int = DEFAULT_N0,
                    params: StabilizationParams | None = None,
                    ablate_ghost: bool = False, degree: int = 2,
                    box=DEFAULT_BOX, solver_tol: float = 1e-10) -> StudyReport:
    """Manufactured-solution refinement study on the unit-circle geometry.

    Solves on ``levels`` successive refinements, records the four error
    norms and their EOCs. With ``ablate_ghost`` the surface value-jump
    and both gradient-jump ghost weights are set to zero; solver failures
    under ablation are recorded per level instead of aborting.
    """
    if levels < 3:
        raise ValueError("convergence study needs at least 3 levels")
    params = params or StabilizationParams()
    if ablate_ghost:
        params = ablated_params(params)
    problem = build_circle_problem(params.c_bulk, params.c_surf)
    ls = problem.geometry
    report = StudyReport()
    prev_errors = None
    for level in range(levels):
        mesh = mesh_at_level(level, n0, box)
        dls = interpolate_levelset(ls, mesh)
        topo = build_cut_topology(mesh, dls)
        dofmap = build_spaces(mesh, topo)
        system = assemble_system(mesh, dls, topo, dofmap, problem, params,
                                 degree)
        try:
            u = solve(system, rel_tol=solver_tol)
        except SolverError as exc:
            report.solver_failures.append((level, str(exc)))
            report.convergence_rows.append({
                "level": level, "h": mesh.h,
                "errors": (SENTINEL_ERROR,) * 4,
                "eocs": (None,) * 4})
            prev_errors = None
            continue
        errors = compute_errors(u, problem, mesh, dls, topo, dofmap).as_tuple()
        if prev_errors is None:
            eocs = (None,) * 4
        else:
            eocs = tuple(float(eoc([a, b])[0])
                         for a, b in zip(prev_errors, errors))
        report.convergence_rows.append({"level": level, "h": mesh.h,
                                        "errors": errors, "eocs": eocs})
        prev_errors = errors
    return report


def _sweep_system(mesh, dls, topo, dofmap, params, degree=2):
    """Base matrix (no ghost penalties) and unit ghost pieces for one
    surface position; configurations are linear combinations of these."""
    base = (params.c_bulk * assemble_bulk_form(mesh, dls, topo, dofmap,
                                               params, degree)
            + params.c_surf * assemble_surface_form(mesh, dls, topo, dofmap,
                                                    params, degree)
            + assemble_coupling_form(mesh, dls, topo, dofmap, params, degree))
    pieces = ghost_penalty_pieces(mesh, topo, dofmap)
    return base, pieces


def _config_matrix(base, pieces, params, config):
    mu_b, tau_b, mu_s, tau_s = sweep_weights(params, config)
    return (base
            + params.c_bulk * (mu_b * pieces["bulk_value"]
                               + tau_b * pieces["bulk_gradient"])
            + params.c_surf * (mu_s * pieces["surface_value"]
                               + tau_s * pieces["surface_gradient"])).tocsr()


def run_condition_sweep(level: int = 1, positions: int = 101,
                        n0: int = DEFAULT_N0,
                        params: StabilizationParams | None = None,
                        configs=SWEEP_CONFIGS, box=DEFAULT_BOX,
                        scaling: str = "symmetric") -> StudyReport:
    """Condition number of the rescaled system matrix while the circle is
    translated along the diagonal by delta times one grid cell, for
    delta = l/(positions-1). A full-cell translation maps the cut pattern
    onto itself wherever the surface keeps its clearance from the box
    boundary. Degenerate matrices under ablation are recorded with a
    sentinel condition number."""
    if positions < 2:
        raise ValueError("sweep needs at least 2 positions")
    params = params or StabilizationParams()
    mesh = mesh_at_level(level, n0, box)
    cell = np.asarray(mesh.cell)
    report = StudyReport()
    for delta in np.linspace(0.0, 1.0, positions):
        ls = circle_levelset(center=delta * cell, radius=1.0)
        dls = interpolate_levelset(ls, mesh)
        topo = build_cut_topology(mesh, dls)
        dofmap = build_spaces(mesh, topo)
        base, pieces = _sweep_system(mesh, dls, topo, dofmap, params)
        for config in configs:
            matrix = _config_matrix(base, pieces, params, config)
            system = AssembledSystem(matrix=matrix,
                                     rhs=np.zeros(dofmap.ndof),
                                     dofmap=dofmap, params=params, h=mesh.h)
            rescaled = rescaled_matrix(system, scaling=scaling)
            try:
                kappa, lam_min, lam_max = condition_number(rescaled)
            except DegenerateMatrixError:
                kappa, lam_min, lam_max = SENTINEL_KAPPA, 0.0, 0.0
            report.condition_rows.append({"delta": float(delta),
                                          "kappa": kappa,
                                          "lambda_min": lam_min,
                                          "lambda_max": lam_max,
                                          "config": config})
    return report


def fit_slope(h_values, quantities) -> float:
    """Least-squares slope of log(quantity) against log(h)."""
    h_values = np.asarray(h_values, dtype=float)
    quantities = np.asarray(quantities, dtype=float)
    return float(np.polyfit(np.log(h_values), np.log(quantities), 1)[0])


def run_geometry_check(levels: int = 4, n0: int = DEFAULT_N0,
                       samples_per_segment: int = 8,
                       box=DEFAULT_BOX) -> StudyReport:
    """Per-level sup of |rho| on the discrete surface and of the normal
    deviation, plus the discrete surface length (kept on the report for
    the length-convergence check)."""
    if levels < 3:
        raise ValueError("geometry check needs at least 3 levels")
    ls = circle_levelset()
    report = StudyReport()
    for level in range(levels):
        mesh = mesh_at_level(level, n0, box)
        dls = interpolate_levelset(ls, mesh)
        topo = build_cut_topology(mesh, dls)
        sup_dist, sup_dev = check_geometry_assumptions(ls, topo,
                                                       samples_per_segment)
        report.geometry_rows.append({"level": level, "sup_dist": sup_dist,
                                     "sup_normal_dev": sup_dev})
        report.geometry_lengths.append(surface_length(topo))
        report.geometry_h.append(mesh.h)
    return report


def _poincare_constant(mesh, topo, dofmap, gram_tangent, gram_ghost, rng,
                       n_random, h):
    """Largest ratio h^-1 ||v||^2_(active elements) over the stabilized
    tangential seminorm, over random mean-zero surface fields."""
    mass_active = surface_element_mass_gram(mesh, topo, dofmap)
    load = surface_trace_load(mesh, topo, dofmap)
    total = surface_length(topo)
    ones = np.zeros(dofmap.ndof)
    ones[dofmap.n_bulk:] = 1.0
    denom_matrix = gram_tangent if gram_ghost is None \
        else (gram_tangent + gram_ghost).tocsr()
    worst = 0.0
    for _ in range(n_random):
        v = np.zeros(dofmap.ndof)
        v[dofmap.n_bulk:] = rng.standard_normal(dofmap.n_surface)
        v -= ((load @ v) / total) * ones
        num = (v @ (mass_active @ v)) / h
        den = v @ (denom_matrix @ v)
        if den > 0.0:
            worst = max(worst, num / den)
    return worst


PROPERTY_NAMES = ("coercivity", "bulk_norm_equivalence", "surface_poincare")


def _across_ratio(values: np.ndarray) -> float:
    """Spread max/min of a positive constant; infinite if it ever loses
    positivity (an unbounded collapse counts as unlimited variation)."""
    if values.min() <= 0.0:
        return np.inf
    return float(values.max() / values.min())


def _contrast_vs_full(ablated: np.ndarray, full: np.ndarray) -> float:
    """Largest pointwise factor by which an ablated constant differs from
    the fully stabilized one. A collapse to zero or below is an infinite
    contrast."""
    if np.any(ablated <= 0.0):
        return np.inf
    ratio = np.maximum(ablated / full, full / ablated)
    return float(ratio.max())


def run_property_suite(level: int = 0, positions: int = 101,
                       n0: int = DEFAULT_N0,
                       params: StabilizationParams | None = None,
                       n_random: int = 100, box=PROPERTY_BOX,
                       seed: int = 9176) -> StudyReport:
    """Measured stability constants across the surface-position sweep.

    Per position and configuration: coercivity (smallest generalized
    eigenvalue of the system matrix against the fully stabilized energy
    Gram, on the deflated pencil), the ghost-penalty norm-extension
    constant of the bulk gradient, and the discrete surface Poincare
    constant over random mean-zero fields.

    Pass flags: the fully stabilized constants must stay within a factor
    2 across positions (coercivity also strictly positive). An ablated
    property passes when it evidences the corresponding degeneracy, i.e.
    it changes by at least a factor 100 against the stabilized constant
    at some position, or spreads by at least a factor 100 across
    positions. Without the surface ghost the coercivity constant
    collapses to (numerical) zero at every position, so the contrast
    against the stabilized value is the meaningful measure there.
    """
    if positions < 2:
        raise ValueError("property sweep needs at least 2 positions")
    params = params or StabilizationParams()
    mesh = mesh_at_level(level, n0, box)
    cell = np.asarray(mesh.cell)
    report = StudyReport()
    constants = {(p, c): [] for c in PROPERTY_CONFIGS for p in PROPERTY_NAMES}
    deltas = np.linspace(0.0, 1.0, positions)
    for idx, delta in enumerate(deltas):
        ls = circle_levelset(center=delta * cell, radius=1.0)
        dls = interpolate_levelset(ls, mesh)
        topo = build_cut_topology(mesh, dls)
        dofmap = build_spaces(mesh, topo)
        base, pieces = _sweep_system(mesh, dls, topo, dofmap, params)
        gram_total = energy_gram(mesh, dls, topo, dofmap, params, "total")
        grad_active = gradient_gram(mesh, dls, topo, dofmap, "active")
        grad_cut = gradient_gram(mesh, dls, topo, dofmap, "cut")
        gram_tangent = surface_tangential_gram(mesh, topo, dofmap)
        ghost_bulk = (params.mu_bulk * pieces["bulk_value"]
                      + params.tau_bulk * pieces["bulk_gradient"]).tocsr()
        ghost_surf = (params.mu_surf * pieces["surface_value"]
                      + params.tau_surf * pieces["surface_gradient"]).tocsr()
        for config in PROPERTY_CONFIGS:
            sweep_name = {"full": "full", "no-bulk-ghost": "no-bulk",
                          "no-surface-ghost": "no-surface"}[config]
            matrix = _config_matrix(base, pieces, params, sweep_name)
            coercivity = deflated_generalized_extremes(matrix, gram_total)[0]
            constants[("coercivity", config)].append(coercivity)
            jb = None if config == "no-bulk-ghost" else ghost_bulk
            rhs_gram = grad_cut if jb is None else (grad_cut + jb).tocsr()
            constants[("bulk_norm_equivalence", config)].append(
                deflated_generalized_extremes(grad_active, rhs_gram)[1])
            js = None if config == "no-surface-ghost" else ghost_surf
            rng = np.random.default_rng(seed + 7 * idx)
            constants[("surface_poincare", config)].append(
                _poincare_constant(mesh, topo, dofmap, gram_tangent, js, rng,
                                   n_random, mesh.h))
    arrays = {key: np.asarray(vals) for key, vals in constants.items()}
    for (prop, config), values in arrays.items():
        across = _across_ratio(values)
        at_zero = float(values[0])
        if config == "full":
            contrast = 1.0
            if prop == "coercivity":
                # a lower-bound constant: positive everywhere and not
                # sagging below half its delta=0 value
                passed = values.min() > 0.0 and \
                    values.min() >= 0.5 * at_zero
            else:
                # upper-bound constants: never exceeding twice the
                # delta=0 value is the position-independent statement
                passed = at_zero > 0.0 and values.max() <= 2.0 * at_zero
        else:
            contrast = _contrast_vs_full(values, arrays[(prop, "full")])
            passed = contrast >= 100.0 or across >= 100.0
        report.property_summary[(prop, config)] = {
            "across": across, "contrast": contrast, "at_zero": at_zero,
            "min": float(values.min()), "max": float(values.max()),
            "passed": passed}
        for delta, value in zip(deltas, values):
            report.property_rows.append({
                "name": f"{prop}[{config}]",
                "constant": float(value),
                "delta": float(delta),
                "pass": bool(passed)})
    return report
