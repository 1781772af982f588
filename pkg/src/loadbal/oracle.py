"""Exact ground-truth side: brute-force optima, the nice-solution
transformation, and a greedy comparison baseline.

The brute-force enumerators are deliberately small-scale (guarded by a work
cap); they exist to certify the main pipeline, not to compete with it.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator

from .model import (
    CostBreakdown,
    Infeasible,
    Instance,
    Solution,
    TooLarge,
    activation_total,
    evaluate_loads,
    evaluate_objective,
    objective_f,
)

DEFAULT_ORACLE_CAP = 10**8


def _feasible_type_vectors(inst: Instance) -> Iterator[tuple[int, ...]]:
    """Budget-pruned lexicographic enumeration of per-machine type choices."""
    m, tau, budget = inst.m, inst.tau, inst.budget
    vec = [0] * m

    def rec(i: int, spent: Fraction):
        if i == m:
            yield tuple(vec)
            return
        acts = inst.machines[i].activation
        for t in range(1, tau + 1):
            cost = spent + acts[t - 1]
            if cost > budget:
                continue
            vec[i] = t
            yield from rec(i + 1, cost)

    yield from rec(0, Fraction(0))


def _min_index_per_type(types: tuple[int, ...], tau: int) -> list[int | None]:
    mu: list[int | None] = [None] * (tau + 1)
    for i, t in enumerate(types, start=1):
        if mu[t] is None:
            mu[t] = i
    return mu


def is_nice(inst: Instance, sol: Solution) -> bool:
    """Per type, the minimum-index activated machine's load must be at least
    eps^2 times the load of every other machine of that type."""
    loads = evaluate_loads(inst, sol)
    eps2 = inst.epsilon.value ** 2
    mu = _min_index_per_type(sol.machine_types, inst.tau)
    for i, t in enumerate(sol.machine_types, start=1):
        lead = mu[t]
        if lead is not None and loads[lead - 1] < eps2 * loads[i - 1]:
            return False
    return True


def _search(
    inst: Instance, cap: int, want_plain: bool, want_nice: bool
) -> tuple[tuple[Solution, CostBreakdown] | None, tuple[Solution, CostBreakdown] | None]:
    """One exhaustive sweep, optionally tracking the nice-restricted optimum too.

    Tie-break everywhere: the lexicographically smallest (types, assignment)
    reaching the minimum wins, which the enumeration order delivers for free.
    """
    m, n, tau = inst.m, inst.n, inst.tau
    work = (tau**m) * ((m + 1) ** n)
    if work > cap:
        raise TooLarge(f"brute force would enumerate ~{work} leaves (cap {cap})")

    psi = inst.objective.psi
    phi = inst.objective.phi_int
    eps2 = inst.epsilon.value ** 2
    speeds = [mach.speed for mach in inst.machines]
    zero = Fraction(0)

    best_plain: list = [None, None]  # objective, solution tuple
    best_nice: list = [None, None]

    any_types = False
    for types in _feasible_type_vectors(inst):
        any_types = True
        sizes = [[inst.jobs[j].sizes[types[i] - 1] for i in range(m)] for j in range(n)]
        penalties = [None if job.is_mandatory else job.penalty for job in inst.jobs]
        totals = [zero] * m
        assignment = [0] * n
        mu = _min_index_per_type(types, tau)

        def leaf():
            loads = [totals[i] / speeds[i] for i in range(m)]
            f_val = zero
            if psi:
                f_val += psi * max(loads)
            if psi != 1:
                f_val += (1 - psi) * sum((lam**phi for lam in loads), zero)
            rej = sum(
                (penalties[j] for j in range(n) if assignment[j] == 0), zero
            )
            obj = f_val + rej
            if want_plain and (best_plain[0] is None or obj < best_plain[0]):
                best_plain[0] = obj
                best_plain[1] = (types, tuple(assignment))
            if want_nice and (best_nice[0] is None or obj < best_nice[0]):
                ok = True
                for i in range(m):
                    lead = mu[types[i]]
                    if loads[lead - 1] < eps2 * loads[i]:
                        ok = False
                        break
                if ok:
                    best_nice[0] = obj
                    best_nice[1] = (types, tuple(assignment))

        def rec(j: int):
            if j == n:
                leaf()
                return
            if penalties[j] is not None:
                assignment[j] = 0
                rec(j + 1)
            for i in range(m):
                assignment[j] = i + 1
                totals[i] += sizes[j][i]
                rec(j + 1)
                totals[i] -= sizes[j][i]
            assignment[j] = 0

        rec(0)

    if not any_types:
        raise Infeasible("no type assignment satisfies the activation budget")

    def pack(best):
        if best[0] is None:
            return None
        types, assignment = best[1]
        sol = Solution(machine_types=tuple(types), assignment=assignment)
        return sol, evaluate_objective(inst, sol)

    return pack(best_plain), pack(best_nice)


def brute_force_optimal(
    inst: Instance, cap: int = DEFAULT_ORACLE_CAP
) -> tuple[Solution, CostBreakdown]:
    plain, _ = _search(inst, cap, want_plain=True, want_nice=False)
    assert plain is not None
    return plain


def brute_force_nice_optimal(
    inst: Instance, cap: int = DEFAULT_ORACLE_CAP
) -> tuple[Solution, CostBreakdown]:
    _, nice = _search(inst, cap, want_plain=False, want_nice=True)
    assert nice is not None
    return nice


def brute_force_both(
    inst: Instance, cap: int = DEFAULT_ORACLE_CAP
) -> tuple[tuple[Solution, CostBreakdown], tuple[Solution, CostBreakdown]]:
    """Plain and nice-restricted optima from a single sweep."""
    plain, nice = _search(inst, cap, want_plain=True, want_nice=True)
    assert plain is not None and nice is not None
    return plain, nice


def make_nice(inst: Instance, sol: Solution) -> Solution:
    """Iteratively empty the most loaded machine of each type onto the
    minimum-index machine of that type until the nice condition holds,
    keeping the first cost-increasing move and then closing the type.

    Rejected jobs are never touched.  Cost comparisons are exact; ties on
    the maximum-load machine go to the smallest index.
    """
    m, tau = inst.m, inst.tau
    eps2 = inst.epsilon.value ** 2
    types = sol.machine_types
    speeds = [mach.speed for mach in inst.machines]
    jobs_on: list[list[int]] = [[] for _ in range(m)]
    for j, target in enumerate(sol.assignment, start=1):
        if target > 0:
            jobs_on[target - 1].append(j)
    totals = [
        sum((inst.size(j, types[i]) for j in jobs_on[i]), Fraction(0))
        for i in range(m)
    ]

    def f_value() -> Fraction:
        return objective_f(
            [totals[i] / speeds[i] for i in range(m)], inst.objective
        )

    for t in range(1, tau + 1):
        members = [i for i in range(m) if types[i] == t]
        if not members:
            continue
        lead = members[0]
        while True:
            i2 = max(members, key=lambda i: (totals[i] / speeds[i], -i))
            if totals[lead] / speeds[lead] >= eps2 * (totals[i2] / speeds[i2]):
                break
            cost_before = f_value()
            moved = jobs_on[i2]
            jobs_on[i2] = []
            jobs_on[lead].extend(moved)
            size_moved = sum((inst.size(j, t) for j in moved), Fraction(0))
            totals[i2] = Fraction(0)
            totals[lead] += size_moved
            if f_value() > cost_before:
                break

    assignment = list(sol.assignment)
    for i in range(m):
        for j in jobs_on[i]:
            assignment[j - 1] = i + 1
    return Solution(machine_types=types, assignment=tuple(assignment))


def greedy_baseline(inst: Instance) -> Solution:
    """Cheapest feasible activation, then list scheduling by incremental cost.

    Jobs are placed in non-increasing order of their maximum size onto the
    machine minimizing the objective increase; a rejectable job is rejected
    when its penalty is strictly cheaper than the best increase.
    """
    m, n = inst.m, inst.n
    types = tuple(
        min(range(1, inst.tau + 1), key=lambda t: (mach.activation[t - 1], t))
        for mach in inst.machines
    )
    if activation_total(inst, types) > inst.budget:
        raise Infeasible("no type assignment satisfies the activation budget")

    psi = inst.objective.psi
    phi = inst.objective.phi_int
    speeds = [mach.speed for mach in inst.machines]
    order = sorted(range(n), key=lambda j: (-max(inst.jobs[j].sizes), j))
    loads = [Fraction(0)] * m
    powers = [Fraction(0)] * m
    sum_pow = Fraction(0)
    max_load = Fraction(0)
    assignment = [0] * n

    for j in order:
        job = inst.jobs[j]
        best_i = None
        best_f = None
        for i in range(m):
            new_load = loads[i] + job.sizes[types[i] - 1] / speeds[i]
            f_new = Fraction(0)
            if psi:
                f_new += psi * max(max_load, new_load)
            if psi != 1:
                f_new += (1 - psi) * (sum_pow - powers[i] + new_load**phi)
            if best_f is None or f_new < best_f:
                best_f = f_new
                best_i = i
        current_f = psi * max_load + (1 - psi) * sum_pow
        if not job.is_mandatory and job.penalty < best_f - current_f:
            continue
        i = best_i
        assignment[j] = i + 1
        loads[i] += job.sizes[types[i] - 1] / speeds[i]
        sum_pow += loads[i] ** phi - powers[i]
        powers[i] = loads[i] ** phi
        max_load = max(max_load, loads[i])

    return Solution(machine_types=types, assignment=tuple(assignment))
