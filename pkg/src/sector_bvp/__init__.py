"""Half-line boundary value problems for operator-differential equations.

Solves ``-u'' + rho(t) A^2 u + A0 u'' + A1 u' + A2 u = 0``, ``u(0) = phi`` on
``t > 0`` for a finite-dimensional normal operator ``A`` with spectrum in a
sector and ``rho`` equal to ``alpha^2`` on (0, 1) and ``beta^2`` on (1, inf).
"""

from .compactness import (
    CompactnessReport,
    CutoffFunction,
    CutoffProduct,
    coercive_check,
    commutator_defect,
    empirical_constant,
    interior_estimate,
    make_cutoff,
)
from .errors import *  # noqa: F401,F403
from .fd_oracle import FdGrid, convergence_order, fd_solve_full, fd_solve_mode
from .functions import ExpPoly, GridFunction
from .nodal import NodalFunction, PanelGrid
from .perturbation import (
    FullSolution,
    apply_p1,
    full_residual,
    green_apply,
    p0_inverse,
    solve_full,
    source_term,
)
from .principal import (
    PrincipalSolution,
    evaluate,
    mode_determinant,
    residual,
    solve_principal,
    trace_error,
)
from .problem import Problem, load_problem, save_problem
from .sobolev import h_theta_norm, l2_norm, w21_norm, w22_norm
from .solvability import SolvabilityReport, check_condition, constants
from .spectral import (
    PerturbationOperators,
    PiecewiseWeight,
    SectorNormalOperator,
    apply,
    compute_bj_norms,
    make_operator,
    operator_from_matrix,
    operator_norm,
    random_operator,
)

__version__ = "0.1.0"
