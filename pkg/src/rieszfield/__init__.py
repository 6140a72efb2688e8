"""Discrete minimum Riesz-energy problems with external fields.

Discretizes sets in R^n into labeled point clouds, assembles regularized
Riesz Gram matrices, and solves the associated convex programs: the Gauss
problem on the simplex, capacitary obstacle problems, and balayage as cone
projection — with certification of the classical structural identities
(Frostman conditions, the swept-plus-capacitary representation, capacity
reciprocals, monotone convergence, thinness at infinity, support laws).
"""

from .errors import ConfigurationError, DomainError, UnsolvableError
from .geometry import (
    Discretization,
    GeometrySpec,
    MonotoneFamily,
    discretize,
    monotone_family,
    restrict,
    shell_decompose,
)
from .kernel import (
    DiscreteMeasure,
    KernelContext,
    SignedMeasure,
    assemble_gram,
    ball_average_diagonal,
    energy,
    energy_distance,
    external_potential,
    inner_product,
    kernel_value,
    potential,
)
from .fields import (
    AdmissibilityReport,
    DeltaSource,
    FieldSpec,
    FieldVector,
    PointMasses,
    PsiPart,
    build_field,
    validate_admissibility,
)
from .solvers import (
    KKTResiduals,
    SolveReport,
    project_simplex,
    qp_solve,
    resolve_tolerance,
    solve_balayage,
    solve_capacitary,
    solve_gauss,
    solve_min_energy_in_class,
)
from .diagnostics import (
    FrostmanReport,
    RepresentationReport,
    SupportReport,
    check_characterization_iii,
    check_frostman,
    check_representation,
    extract_support,
    mass_radius,
    support_report,
)
from .experiments import (
    ConvergenceTrace,
    SolvabilityReport,
    ThinnessReport,
    classify_thinness,
    probe_solvability,
    run_monotone_decreasing,
    run_monotone_increasing,
)
from .scenarios import Scenario, builtin_scenarios, load_config, parse_scenario

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
