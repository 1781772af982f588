"""Exact-arithmetic approximation solver for generalized load balancing:
machine types under an activation budget, job rejection, and a combined
max-load / sum-of-powers objective."""

from .model import (
    MANDATORY,
    BudgetViolation,
    CostBreakdown,
    Epsilon,
    ExplosionGuard,
    ExtractionFailure,
    Infeasible,
    Instance,
    JobSpec,
    MachineSpec,
    MandatoryRejected,
    NodeLimit,
    ObjectiveParams,
    PreconditionViolated,
    Solution,
    TooLarge,
    evaluate_loads,
    evaluate_objective,
    instance_from_json,
    instance_to_json,
    solution_from_json,
    solution_to_json,
    validate_instance,
    validate_solution,
)
from .oracle import (
    brute_force_nice_optimal,
    brute_force_optimal,
    greedy_baseline,
    is_nice,
    make_nice,
)
from .pipeline import SolveOptions, SolveResult, solve_instance
from .rounding import RoundedInstance, ceil_pow, floor_pow, round_instance

__all__ = [
    "MANDATORY",
    "BudgetViolation",
    "CostBreakdown",
    "Epsilon",
    "ExplosionGuard",
    "ExtractionFailure",
    "Infeasible",
    "Instance",
    "JobSpec",
    "MachineSpec",
    "MandatoryRejected",
    "NodeLimit",
    "ObjectiveParams",
    "PreconditionViolated",
    "RoundedInstance",
    "Solution",
    "SolveOptions",
    "SolveResult",
    "TooLarge",
    "brute_force_nice_optimal",
    "brute_force_optimal",
    "ceil_pow",
    "evaluate_loads",
    "evaluate_objective",
    "floor_pow",
    "greedy_baseline",
    "instance_from_json",
    "instance_to_json",
    "is_nice",
    "make_nice",
    "round_instance",
    "solution_from_json",
    "solution_to_json",
    "solve_instance",
    "validate_instance",
    "validate_solution",
]
