"""Stabilized cut discontinuous Galerkin method for coupled bulk-surface
diffusion-reaction problems on unfitted structured 2D meshes."""

from .exceptions import (ConfigurationError, CutDGError,
                         DegenerateMatrixError, SolverError, StructuralError)
from .forms import (AssembledSystem, StabilizationParams, assemble_bulk_form,
                    assemble_coupling_form, assemble_ghost_bulk,
                    assemble_ghost_surface, assemble_rhs,
                    assemble_surface_form, assemble_system, energy_gram)
from .levelset import (CutTopology, DiscreteLevelSet, LevelSet,
                       build_cut_topology, check_geometry_assumptions,
                       circle_levelset, classify_elements,
                       closest_point_circle, extract_surface_segments,
                       interpolate_levelset, line_levelset, surface_length)
from .manufactured import (ErrorReport, ManufacturedProblem,
                           build_affine_problem, build_circle_problem,
                           compute_errors, eoc)
from .mesh import (BackgroundMesh, build_structured_mesh, face_connectivity,
                   refine_uniform)
from .quadrature import (QuadratureRule, clip_element_rule, cut_face_rule,
                         full_element_rule, full_face_rule,
                         surface_segment_rule)
from .solver import condition_number, rescaled_matrix, solve
from .space import (BrokenSpace, CombinedDofMap, build_spaces, evaluate_basis,
                    interpolate_nodal, interpolate_pair)

__version__ = "0.1.0"
