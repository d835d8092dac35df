"""Photonic-crystal band structures on staggered periodic grids.

Matrix-free compatible finite differences for the shifted double-curl
eigenproblem, a kernel-compensation penalty that moves the huge curl
kernel out of the low spectrum, and a block preconditioned eigensolver
with exact-FFT or multigrid preconditioning.
"""

__version__ = "0.1.0"

from .compensation import (CompensatedOperator, EigResult, apply_S,
                           penalty_gamma, recompute_check)
from .dielectric import (DielectricModel, M0Diagonal, assemble_M0,
                         geometry_bcc_gyroid, geometry_by_name,
                         geometry_fcc_diamond, geometry_homogeneous,
                         geometry_sc_curved)
from .grid_fields import (GridSpec, ScalarField, Space, VectorField,
                          linearize, project_scalar, project_vector)
from .lattice import (KPath, LatticeKind, LatticeSpec, make_lattice,
                      sample_kpath, symmetry_points)
from .lobpcg import SolverConfig, lobpcg_solve
from .precond_fft import FourierSymbols, build_symbols, solve_P
from .precond_mg import MGHierarchy, build_hierarchy, distributive_solve, vcycle
from .stencil_ops import (ShiftedOperators, StencilCoeffs, apply_curl_k,
                          apply_curl_k_adj, apply_D, apply_div_k,
                          apply_div_k_adj, apply_grad_k, apply_grad_k_adj,
                          apply_vector_laplacian, dense_assemble,
                          stencil_coeffs)
from .bandcli import (BandStructure, RunConfig, exact_iso_eigs, gap_ratio,
                      run_bandstructure, solve_at_k, verify_order)
