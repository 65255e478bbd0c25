"""Teaching-timetable minimal-perturbation planner.

Re-optimizes a department's teaching assignments after late section
additions or cancellations, minimizing course swaps while maximizing
faculty time preferences, and reports the resulting swap plan.
"""

from .instance import (
    ConflictPair,
    Course,
    FacultyMember,
    Instance,
    PenaltyOverride,
    Scenario,
    SectionDelta,
    TimeSlot,
    ValidationReport,
    WeightOverride,
    apply_scenario,
    baseline_demand,
    derive_availability,
    validate_instance,
)
from .model import (
    FeasibilityReport,
    IlpModel,
    LinearConstraint,
    VariableRef,
    build_model,
    canonical_t,
    check_feasible,
    evaluate_objective,
    expected_constraint_count,
)
from .solver import (
    INFEASIBLE,
    LIMIT_REACHED,
    OPTIMAL,
    Solution,
    SolveOptions,
    SolveStats,
    brute_force,
    min_change_refine,
    solve,
    solve_lp_relaxation,
)

__version__ = "0.1.0"

__all__ = [
    "ConflictPair", "Course", "FacultyMember", "Instance", "PenaltyOverride",
    "Scenario", "SectionDelta", "TimeSlot", "ValidationReport",
    "WeightOverride", "apply_scenario", "baseline_demand",
    "derive_availability", "validate_instance",
    "FeasibilityReport", "IlpModel", "LinearConstraint", "VariableRef",
    "build_model", "canonical_t", "check_feasible", "evaluate_objective",
    "expected_constraint_count",
    "INFEASIBLE", "LIMIT_REACHED", "OPTIMAL", "Solution", "SolveOptions",
    "SolveStats", "brute_force", "min_change_refine", "solve",
    "solve_lp_relaxation",
    "__version__",
]
