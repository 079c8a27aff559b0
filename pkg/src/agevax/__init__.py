"""Age-structured SIR epidemics with vaccination: simulation, final size,
threshold classification and optimal allocation of a limited vaccine budget."""

from .errors import (
    GridMismatchError,
    IntegrationError,
    NonSeparableKernelError,
    SolverError,
)
from .grid import AgeDensity, AgeGrid, Kernel, apply_kernel, integrate
from .model import (
    AdmissibilityReport,
    EpidemicModel,
    SeparablePlan,
    StaticAllocation,
    TabulatedPlan,
    VaccinationPlan,
    check_plan_admissible,
    check_static_admissible,
    zero_plan,
)
from .dynamics import (
    SimConfig,
    State,
    Trajectory,
    representation_residual,
    simulate,
    step,
    write_trajectory_csv,
)
from .finalsize import (
    FinalSizeSolution,
    ScalarSummary,
    objective_ivp,
    solve_final_size,
    solve_final_size_separable,
)
from .spectral import (
    EigenResult,
    ThresholdResult,
    classify_threshold,
    post_epidemic_eigenvalue,
    principal_eigenvalue,
)
from .optimize import (
    BathtubAllocation,
    OptimizerReport,
    bathtub_allocate,
    optimize_projected_gradient,
    project_allocation,
    sweep_budget,
)
from .harness import (
    AuditEntry,
    EquivalenceEntry,
    EquivalenceReport,
    MollifierProfile,
    PlanOutcome,
    evaluate_plan,
    maximizing_sequence,
    mollified_plan,
    objective_ovp,
    upper_bound_audit,
)
from .config import ConfigError, ScenarioConfig, load_scenario, parse_scenario
from .scenarios import gaussian_kernel_model, homogeneous_model, separable_model

__version__ = "0.1.0"
