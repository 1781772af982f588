"""Problem data model: instances, solutions, validation, exact cost evaluation.

Each machine ``i`` has a speed ``s_i`` and is activated in one of ``tau``
types at cost ``alpha_i(t)``, subject to a global activation budget.  Each
job ``j`` either runs on one machine (its size ``p_j(t)`` depends on the
machine's type) or is rejected at penalty ``pi_j``.  The objective is

    psi * max_i load_i  +  (1 - psi) * sum_i load_i**phi  +  sum of penalties

over rejected jobs.  All quantities are ``fractions.Fraction``; every cost
comparison in this package is exact.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


class AccuracyRegimeWarning(UserWarning):
    """Accuracy parameter is outside the regime the formal guarantees assume."""


class BudgetViolation(Exception):
    """Total activation cost of a solution exceeds the instance budget."""


class MandatoryRejected(Exception):
    """A job with an infinite rejection penalty was rejected."""


class PreconditionViolated(Exception):
    """Caller-supplied data does not satisfy a documented precondition."""


class TooLarge(Exception):
    """Exhaustive enumeration would exceed the configured work cap."""


class Infeasible(Exception):
    """No feasible solution exists (no type assignment fits the budget)."""


class ExtractionFailure(Exception):
    """Internal consistency failure while turning a relaxed solution into a schedule."""


class NodeLimit(Exception):
    """Branch-and-bound node cap reached before proving optimality."""


class ExplosionGuard(Exception):
    """Projected configuration count exceeds the enumeration cap."""


class _MandatoryType:
    """Singleton marker for pi_j = infinity (job may never be rejected)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MANDATORY"


MANDATORY = _MandatoryType()


def parse_rational(value) -> Fraction:
    """Parse a rational from a "p/q" string (or int); exact, never float."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise ValueError(f"not a rational: {value!r}")


def format_rational(value: Fraction) -> str:
    return str(Fraction(value))


@dataclass(frozen=True)
class Epsilon:
    """Accuracy parameter eps = 1/inverse for a positive integer inverse >= 2."""

    inverse: int

    def __post_init__(self):
        if not isinstance(self.inverse, int) or self.inverse < 2:
            raise ValueError("epsilon inverse must be an integer >= 2")
        if self.inverse < 100:
            warnings.warn(
                "1/eps = %d: formal approximation guarantees are stated for "
                "1/eps >= 100; desk-scale runs use the measured oracle ratio "
                "instead" % self.inverse,
                AccuracyRegimeWarning,
                stacklevel=2,
            )

    @property
    def value(self) -> Fraction:
        return Fraction(1, self.inverse)

    @property
    def one_plus(self) -> Fraction:
        """The rounding base 1 + eps."""
        return 1 + Fraction(1, self.inverse)


@dataclass(frozen=True)
class ObjectiveParams:
    """Objective combinator: psi weights max-load, (1-psi) weights sum of load^phi."""

    psi: Fraction
    phi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "psi", Fraction(self.psi))
        object.__setattr__(self, "phi", Fraction(self.phi))

    @property
    def phi_int(self) -> int:
        """phi as an exact integer exponent; raises if phi is not integral."""
        if self.phi.denominator != 1:
            raise PreconditionViolated(
                "phi must be an integer for exact evaluation; got %s" % self.phi
            )
        return int(self.phi)


@dataclass(frozen=True)
class MachineSpec:
    speed: Fraction
    activation: tuple[Fraction, ...]


@dataclass(frozen=True)
class JobSpec:
    sizes: tuple[Fraction, ...]
    penalty: Fraction | _MandatoryType

    @property
    def is_mandatory(self) -> bool:
        return isinstance(self.penalty, _MandatoryType)


@dataclass(frozen=True)
class Instance:
    machines: tuple[MachineSpec, ...]
    jobs: tuple[JobSpec, ...]
    tau: int
    budget: Fraction
    objective: ObjectiveParams
    epsilon: Epsilon

    @property
    def m(self) -> int:
        return len(self.machines)

    @property
    def n(self) -> int:
        return len(self.jobs)

    def speed(self, i: int) -> Fraction:
        """Speed of machine i (1-based)."""
        return self.machines[i - 1].speed

    def size(self, j: int, t: int) -> Fraction:
        """Size of job j on a type-t machine (both 1-based)."""
        return self.jobs[j - 1].sizes[t - 1]


@dataclass(frozen=True)
class Solution:
    """Per-machine activated types (1-based) and job assignment (0 = rejected)."""

    machine_types: tuple[int, ...]
    assignment: tuple[int, ...]


@dataclass(frozen=True)
class CostBreakdown:
    loads: tuple[Fraction, ...]
    f_value: Fraction
    rejection_total: Fraction
    objective: Fraction


# Default cap on tau: configuration enumeration is exponential in tau.
MAX_TAU = 4


def validate_instance(inst: Instance, max_tau: int = MAX_TAU) -> list[str]:
    """Return every invariant violation (empty list means the instance is ok)."""
    out: list[str] = []
    if inst.tau < 1:
        out.append("tau must be >= 1")
    if inst.tau > max_tau:
        out.append(f"tau={inst.tau} above enumeration cap {max_tau}")
    if not inst.machines:
        out.append("instance must have at least one machine")
    if inst.budget < 0:
        out.append("budget must be non-negative")
    psi, phi = inst.objective.psi, inst.objective.phi
    if not (0 <= psi <= 1):
        out.append(f"psi={psi} outside [0, 1]")
    if not (phi > 1):
        out.append(f"phi={phi} must be > 1")
    if phi.denominator != 1:
        out.append(f"phi={phi} must be an integer for exact evaluation")
    for i, mach in enumerate(inst.machines, start=1):
        if mach.speed <= 0:
            out.append(f"machines[{i}]: speed must be positive")
        if len(mach.activation) != inst.tau:
            out.append(f"machines[{i}]: activation table must have {inst.tau} entries")
        elif any(a < 0 for a in mach.activation):
            out.append(f"machines[{i}]: activation costs must be non-negative")
    for i in range(1, len(inst.machines)):
        if inst.machines[i].speed > inst.machines[i - 1].speed:
            out.append(f"machines[{i}]..machines[{i + 1}]: speeds not non-increasing")
            break
    for j, job in enumerate(inst.jobs, start=1):
        if len(job.sizes) != inst.tau:
            out.append(f"jobs[{j}]: size vector must have {inst.tau} entries")
        elif any(p <= 0 for p in job.sizes):
            out.append(f"jobs[{j}]: sizes must be positive")
        if not job.is_mandatory and job.penalty <= 0:
            out.append(f"jobs[{j}]: penalty must be positive (or mandatory)")
    return out


def normalize_speeds(inst: Instance) -> Instance:
    """Divide all speeds by s_1 so the fastest machine has speed 1."""
    if not inst.machines:
        return inst
    s1 = inst.machines[0].speed
    if s1 == 1:
        return inst
    machines = tuple(
        MachineSpec(speed=m.speed / s1, activation=m.activation) for m in inst.machines
    )
    return Instance(
        machines=machines,
        jobs=inst.jobs,
        tau=inst.tau,
        budget=inst.budget,
        objective=inst.objective,
        epsilon=inst.epsilon,
    )


def evaluate_loads(inst: Instance, sol: Solution) -> tuple[Fraction, ...]:
    """Exact per-machine loads: sum of assigned sizes over machine speed."""
    m = inst.m
    totals = [Fraction(0)] * m
    for j, target in enumerate(sol.assignment, start=1):
        if target == 0:
            continue
        if not (1 <= target <= m):
            raise IndexError(f"assignment of job {j} out of range: {target}")
        t = sol.machine_types[target - 1]
        if not (1 <= t <= inst.tau):
            raise IndexError(f"type of machine {target} out of range: {t}")
        totals[target - 1] += inst.size(j, t)
    return tuple(totals[i] / inst.machines[i].speed for i in range(m))


def objective_f(loads: Sequence[Fraction], params: ObjectiveParams) -> Fraction:
    """F(loads) = psi * max + (1 - psi) * sum of phi-th powers."""
    if not loads:
        return Fraction(0)
    phi = params.phi_int
    psi = params.psi
    value = Fraction(0)
    if psi:
        value += psi * max(loads)
    if psi != 1:
        value += (1 - psi) * sum((lam**phi for lam in loads), Fraction(0))
    return value


def activation_total(inst: Instance, types: Sequence[int]) -> Fraction:
    return sum(
        (inst.machines[i].activation[t - 1] for i, t in enumerate(types)), Fraction(0)
    )


def evaluate_objective(inst: Instance, sol: Solution) -> CostBreakdown:
    """Exact objective of a feasible solution; raises on budget/mandatory violations."""
    if len(sol.machine_types) != inst.m:
        raise IndexError("machine_types length mismatch")
    if len(sol.assignment) != inst.n:
        raise IndexError("assignment length mismatch")
    for i, t in enumerate(sol.machine_types, start=1):
        if not (1 <= t <= inst.tau):
            raise IndexError(f"type of machine {i} out of range: {t}")
    if activation_total(inst, sol.machine_types) > inst.budget:
        raise BudgetViolation(
            "activation cost %s exceeds budget %s"
            % (activation_total(inst, sol.machine_types), inst.budget)
        )
    rejection = Fraction(0)
    for j, target in enumerate(sol.assignment, start=1):
        if target == 0:
            job = inst.jobs[j - 1]
            if job.is_mandatory:
                raise MandatoryRejected(f"job {j} is mandatory but rejected")
            rejection += job.penalty
    loads = evaluate_loads(inst, sol)
    f_value = objective_f(loads, inst.objective)
    return CostBreakdown(
        loads=loads,
        f_value=f_value,
        rejection_total=rejection,
        objective=f_value + rejection,
    )


def validate_solution(inst: Instance, sol: Solution) -> list[str]:
    """Feasibility report for a solution (empty list means feasible)."""
    out: list[str] = []
    if len(sol.machine_types) != inst.m:
        out.append("types list length mismatch")
        return out
    if len(sol.assignment) != inst.n:
        out.append("assignment list length mismatch")
        return out
    for i, t in enumerate(sol.machine_types, start=1):
        if not (1 <= t <= inst.tau):
            out.append(f"machine {i}: type {t} out of range")
    for j, target in enumerate(sol.assignment, start=1):
        if not (0 <= target <= inst.m):
            out.append(f"job {j}: assignment {target} out of range")
        elif target == 0 and inst.jobs[j - 1].is_mandatory:
            out.append(f"job {j}: mandatory but rejected")
    if out:
        return out
    total = activation_total(inst, sol.machine_types)
    if total > inst.budget:
        out.append(f"budget violated: activation cost {total} > budget {inst.budget}")
    return out


def check_F_sandwich(
    loads: Sequence[Fraction],
    loads_hi: Sequence[Fraction],
    rho: int,
    eps: Epsilon,
    params: ObjectiveParams,
) -> bool:
    """Check F(loads) <= F(loads_hi) <= (1+eps)^(rho*phi) * F(loads).

    Precondition (re-checked here): loads_i <= loads_hi_i <= (1+eps)^rho * loads_i
    componentwise, for an integer rho >= 1.
    """
    if rho < 1 or int(rho) != rho:
        raise PreconditionViolated("rho must be a positive integer")
    if len(loads) != len(loads_hi):
        raise PreconditionViolated("load vectors differ in length")
    factor = eps.one_plus ** int(rho)
    for lam, lam_hi in zip(loads, loads_hi):
        if not (lam <= lam_hi <= factor * lam):
            raise PreconditionViolated(
                f"componentwise sandwich violated: {lam} vs {lam_hi}"
            )
    f_lo = objective_f(loads, params)
    f_hi = objective_f(loads_hi, params)
    bound = eps.one_plus ** (int(rho) * params.phi_int)
    return f_lo <= f_hi <= bound * f_lo


# ---------------------------------------------------------------------------
# JSON wire formats


def instance_to_json(inst: Instance) -> dict:
    return {
        "tau": inst.tau,
        "budget": format_rational(inst.budget),
        "psi": format_rational(inst.objective.psi),
        "phi": format_rational(inst.objective.phi),
        "epsilon_inverse": inst.epsilon.inverse,
        "machines": [
            {
                "speed": format_rational(m.speed),
                "activation": [format_rational(a) for a in m.activation],
            }
            for m in inst.machines
        ],
        "jobs": [
            {
                "sizes": [format_rational(p) for p in job.sizes],
                "penalty": "mandatory"
                if job.is_mandatory
                else format_rational(job.penalty),
            }
            for job in inst.jobs
        ],
    }


def instance_from_json(data: dict, normalize: bool = True) -> Instance:
    try:
        tau = int(data["tau"])
        machines = tuple(
            MachineSpec(
                speed=parse_rational(m["speed"]),
                activation=tuple(parse_rational(a) for a in m["activation"]),
            )
            for m in data["machines"]
        )
        jobs = tuple(
            JobSpec(
                sizes=tuple(parse_rational(p) for p in j["sizes"]),
                penalty=MANDATORY
                if j["penalty"] == "mandatory"
                else parse_rational(j["penalty"]),
            )
            for j in data["jobs"]
        )
        inst = Instance(
            machines=machines,
            jobs=jobs,
            tau=tau,
            budget=parse_rational(data["budget"]),
            objective=ObjectiveParams(
                psi=parse_rational(data["psi"]), phi=parse_rational(data["phi"])
            ),
            epsilon=Epsilon(int(data["epsilon_inverse"])),
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed instance: {exc}") from exc
    return normalize_speeds(inst) if normalize else inst


def solution_to_json(sol: Solution, objective: Fraction) -> dict:
    return {
        "types": list(sol.machine_types),
        "assignment": list(sol.assignment),
        "objective": format_rational(objective),
    }


def solution_from_json(data: dict) -> tuple[Solution, Fraction]:
    try:
        sol = Solution(
            machine_types=tuple(int(t) for t in data["types"]),
            assignment=tuple(int(a) for a in data["assignment"]),
        )
        claimed = parse_rational(data["objective"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed solution: {exc}") from exc
    return sol, claimed


def dump_canonical_json(data: dict) -> str:
    """Stable byte representation used for all emitted files."""
    return json.dumps(data, indent=1, sort_keys=True) + "\n"


def load_instance_file(path: str, normalize: bool = True) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("malformed instance: top-level JSON must be an object")
    return instance_from_json(data, normalize=normalize)


def load_solution_file(path: str) -> tuple[Solution, Fraction]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("malformed solution: top-level JSON must be an object")
    return solution_from_json(data)
