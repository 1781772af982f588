"""Turning an optimal relaxed solution into a feasible schedule.

Stages: ceil the count variables; re-assign jobs to types with a totally
unimodular LP (integral basic optimum); allocate large jobs by the per-
configuration counts and small jobs by seeded next-fit over temporary
machines; empty the virtual (fractional-remainder) machines onto the
per-type lead machine; choose real machine types with a second totally
unimodular LP; map temporary machines onto real indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import simplex
from .configs import Configuration, config_small_area, config_w
from .milp import MilpModel, MilpSolution
from .model import ExtractionFailure, Solution
from .rounding import RoundedInstance, pow1p


@dataclass
class TempMachine:
    config: Configuration
    config_index: int
    kind: str  # "actual" | "virtual" | "sentinel"
    copy: int
    promoted: bool = False
    mu_type: int | None = None
    jobs: list[int] = field(default_factory=list)
    small_total: Fraction = Fraction(0)
    large_total: Fraction = Fraction(0)

    @property
    def total(self) -> Fraction:
        return self.small_total + self.large_total


@dataclass
class ExtractTrace:
    rejection_cost: Fraction
    milp_rejection_cost: Fraction
    virtual_count: int
    virtual_config_indices: list[int]
    lemma7_max_ratio: Fraction | None  # max load over (1+eps)^7 absent
    lemma7_bound_ok: bool
    lemma8_ratios: dict[int, Fraction]  # per type: mu total / w(C(mu))
    sentinel_empty: bool
    machine_loads: list[tuple[int, Fraction, Fraction]]  # (config idx, total, w)


def round_counts(
    msol: MilpSolution, model: MilpModel
) -> tuple[dict, dict, dict]:
    """Componentwise ceilings of n*, n'*, x*."""
    if msol.status != "optimal":
        raise ExtractionFailure("extraction requires an optimal relaxed solution")
    n_hat: dict[tuple[int, int], int] = {}
    np_hat: dict[tuple[int, int], int] = {}
    x_hat: dict[int, int] = {}
    for k, v in msol.values.items():
        if k[0] == "n":
            n_hat[(k[1], k[2])] = math.ceil(v)
        elif k[0] == "np":
            np_hat[(k[1], k[2])] = math.ceil(v)
        elif k[0] == "x":
            x_hat[k[1]] = math.ceil(v)
    return n_hat, np_hat, x_hat


def solve_lp_y(
    rinst: RoundedInstance,
    model: MilpModel,
    n_hat: dict,
    np_hat: dict,
) -> tuple[list[int], Fraction]:
    """Integral minimum-penalty job-to-type assignment under the ceiled
    class capacities.  Returns (per-job type, 0 = rejected) and its cost."""
    base = rinst.base
    active = model.guess.active_types()
    zeta_sets = {t: set(zs) for t, zs in model.zeta.items()}
    cols: list[tuple[int, int]] = []  # (job, type) with type 0 = reject
    col_at: dict[tuple[int, int], int] = {}
    obj: dict[int, Fraction] = {}
    for j in range(1, base.n + 1):
        job = base.jobs[j - 1]
        if not job.is_mandatory:
            col_at[(j, 0)] = len(cols)
            obj[len(cols)] = job.penalty
            cols.append((j, 0))
        for t in active:
            if rinst.size_exponents[j - 1][t - 1] in zeta_sets[t]:
                col_at[(j, t)] = len(cols)
                cols.append((j, t))
    rows = []
    for j in range(1, base.n + 1):
        coeffs = {
            col_at[(j, t)]: Fraction(1)
            for t in [0] + active
            if (j, t) in col_at
        }
        rows.append((coeffs, simplex.EQ, Fraction(1)))
    for t in active:
        for z in model.zeta[t]:
            coeffs = {
                col_at[(j, t)]: Fraction(1)
                for j in range(1, base.n + 1)
                if (j, t) in col_at and rinst.size_exponents[j - 1][t - 1] == z
            }
            if coeffs:
                cap = n_hat.get((z, t), 0) + np_hat.get((z, t), 0)
                rows.append((coeffs, simplex.LE, Fraction(cap)))
    res = simplex.solve_lp_arrays(len(cols), obj, rows)
    if res.status != simplex.OPTIMAL:
        raise ExtractionFailure("job-to-type assignment LP is infeasible")
    assignment = [0] * base.n
    cost = Fraction(0)
    for idx, v in enumerate(res.values):
        if v == 1:
            j, t = cols[idx]
            assignment[j - 1] = t
            if t == 0:
                cost += obj[idx]
        elif v != 0:
            raise ExtractionFailure(
                "job-to-type LP produced a non-integral basic optimum"
            )
    return assignment, cost


def _machine_order_key(tm: TempMachine):
    c = tm.config
    return (
        c.w_exponent is None,
        -(c.w_exponent or 0),
        tm.config_index,
        tm.copy,
    )


def build_temp_machines(
    model: MilpModel, msol: MilpSolution, x_hat: dict
) -> tuple[list[TempMachine], dict[int, TempMachine]]:
    """ceil(x*) copies per configuration, split into floor(x*) actual ones
    and at most one virtual one; designates one cover-band machine per type
    as the lead (promoting its virtual copy to actual when necessary)."""
    temp: list[TempMachine] = []
    by_config: dict[int, list[TempMachine]] = {}
    for k, cnt in x_hat.items():
        floor_k = math.floor(msol.values[("x", k)])
        copies = []
        for copy in range(cnt):
            tm = TempMachine(
                config=model.configs[k],
                config_index=k,
                kind="actual" if copy < floor_k else "virtual",
                copy=copy,
            )
            copies.append(tm)
            temp.append(tm)
        if copies:
            by_config[k] = copies
    mu_machines: dict[int, TempMachine] = {}
    for t in model.guess.active_types():
        candidates = [k for k in model.band[t] if x_hat.get(k, 0) >= 1]
        if not candidates:
            raise ExtractionFailure(f"type {t}: no cover configuration was used")
        best = max(
            candidates,
            key=lambda k: (
                model.configs[k].w_exponent is not None,
                model.configs[k].w_exponent or 0,
                model.configs[k].r_steps,
                -k,
            ),
        )
        chosen = by_config[best][0]  # copy 0 is actual whenever one exists
        if chosen.kind == "virtual":
            chosen.kind = "actual"
            chosen.promoted = True
        chosen.mu_type = t
        mu_machines[t] = chosen
    return temp, mu_machines


def allocate_jobs(
    rinst: RoundedInstance,
    model: MilpModel,
    y_assign: list[int],
    n_hat: dict,
    np_hat: dict,
    temp: list[TempMachine],
    mu_machines: dict[int, TempMachine],
) -> list[TempMachine]:
    """Large jobs by per-configuration counts; small jobs seeded onto the
    lead machine, then next-fit over machines in non-increasing w order and
    jobs in non-increasing size order, advancing past a machine once its
    small total exceeds r(C) + 2 eps w(C).  A sentinel machine is appended
    per type and must stay empty."""
    eps = rinst.eps
    gamma = model.gamma
    active = model.guess.active_types()
    eps_gamma = eps.value**gamma

    pending: dict[tuple[int, int], list[int]] = {}
    for j, t in enumerate(y_assign, start=1):
        if t > 0:
            z = rinst.size_exponents[j - 1][t - 1]
            pending.setdefault((t, z), []).append(j)

    machines_by_type: dict[int, list[TempMachine]] = {t: [] for t in active}
    for tm in temp:
        if not tm.config.is_zero:
            machines_by_type[tm.config.machine_type].append(tm)
    for t in active:
        machines_by_type[t].sort(key=_machine_order_key)

    small_pool: dict[int, dict[int, list[int]]] = {t: {} for t in active}
    for (t, z), jobs in sorted(pending.items()):
        want_large = min(n_hat.get((z, t), 0), len(jobs))
        large_jobs = jobs[:want_large]
        if jobs[want_large:]:
            small_pool[t][z] = jobs[want_large:]
        placed = 0
        size = pow1p(eps, z)
        for tm in machines_by_type[t]:
            if placed == len(large_jobs):
                break
            cap = dict(tm.config.large_counts).get(z, 0)
            take = min(cap, len(large_jobs) - placed)
            if take:
                tm.jobs.extend(large_jobs[placed : placed + take])
                tm.large_total += take * size
                placed += take
        if placed < len(large_jobs):
            raise ExtractionFailure(
                f"large jobs of class ({t},{z}) exceed configuration capacity"
            )

    sentinels: list[TempMachine] = []
    for t in active:
        pool = small_pool[t]
        mu_m = mu_machines[t]
        w_mu = config_w(mu_m.config, eps)
        if w_mu > 0:
            for z in sorted(pool):
                if pool[z] and pow1p(eps, z - 3) < eps_gamma * w_mu:
                    j = pool[z].pop(0)
                    mu_m.jobs.append(j)
                    mu_m.small_total += pow1p(eps, z)
        jobs_desc = sorted(
            (
                (z, j)
                for z, jobs in pool.items()
                for j in jobs
            ),
            key=lambda zj: (-zj[0], zj[1]),
        )
        sentinel = TempMachine(
            config=Configuration(
                machine_type=t,
                speed_exponent=0,
                w_exponent=None,
                r_steps=0,
                large_counts=(),
            ),
            config_index=-1,
            kind="sentinel",
            copy=0,
        )
        sentinels.append(sentinel)
        walk = machines_by_type[t] + [sentinel]
        ptr = 0
        for z, j in jobs_desc:
            if ptr >= len(walk):
                raise ExtractionFailure(
                    f"type {t}: small jobs overflow all machines"
                )
            tm = walk[ptr]
            tm.jobs.append(j)
            tm.small_total += pow1p(eps, z)
            if tm.small_total > config_small_area(tm.config, eps):
                ptr += 1
    return sentinels


def reassign_virtual(
    rinst: RoundedInstance,
    model: MilpModel,
    temp: list[TempMachine],
    mu_machines: dict[int, TempMachine],
) -> tuple[int, list[int]]:
    """Move every job on a virtual machine to the lead machine of its type."""
    count = 0
    configs_seen = []
    for tm in temp:
        if tm.kind != "virtual":
            continue
        count += 1
        configs_seen.append(tm.config_index)
        if not tm.jobs:
            continue
        target = mu_machines[tm.config.machine_type]
        target.jobs.extend(tm.jobs)
        target.small_total += tm.small_total
        target.large_total += tm.large_total
        tm.jobs = []
        tm.small_total = Fraction(0)
        tm.large_total = Fraction(0)
    return count, configs_seen


def solve_lp_z(
    rinst: RoundedInstance,
    model: MilpModel,
    demands: dict[tuple[int, int], int],
) -> list[int]:
    """Integral minimum-activation typing of the real machines covering the
    per-(speed, type) actual-machine demands and pinning the lead indices."""
    base = rinst.base
    active = model.guess.active_types()
    guess = model.guess
    pins: dict[tuple[int, int], int] = {}
    for t in active:
        mu_t = guess.mu[t - 1]
        pins[(mu_t, t)] = 1
        for t2 in active:
            if t2 != t:
                pins[(mu_t, t2)] = 0
        for i in range(1, mu_t):
            pins[(i, t)] = 0

    cols: list[tuple[int, int]] = []
    col_at: dict[tuple[int, int], int] = {}
    obj: dict[int, Fraction] = {}
    for i in range(1, base.m + 1):
        for t in active:
            if (i, t) not in pins:
                col_at[(i, t)] = len(cols)
                a = base.machines[i - 1].activation[t - 1]
                if a:
                    obj[len(cols)] = a
                cols.append((i, t))
    rows = []
    for i in range(1, base.m + 1):
        coeffs = {}
        rhs = Fraction(1)
        for t in active:
            if (i, t) in pins:
                rhs -= pins[(i, t)]
            else:
                coeffs[col_at[(i, t)]] = Fraction(1)
        rows.append((coeffs, simplex.EQ, rhs))
    for (s_exp, t), demand in sorted(demands.items()):
        if demand <= 0:
            continue
        coeffs = {}
        rhs = Fraction(demand)
        for i in rinst.machines_in_class(s_exp):
            if (i, t) in pins:
                rhs -= pins[(i, t)]
            elif (i, t) in col_at:
                coeffs[col_at[(i, t)]] = Fraction(1)
        rows.append((coeffs, simplex.GE, rhs))
    res = simplex.solve_lp_arrays(len(cols), obj, rows)
    if res.status != simplex.OPTIMAL:
        raise ExtractionFailure("machine-typing LP is infeasible")
    types = [0] * base.m
    for (i, t), v in pins.items():
        if v == 1:
            types[i - 1] = t
    for idx, v in enumerate(res.values):
        if v == 1:
            i, t = cols[idx]
            if types[i - 1]:
                raise ExtractionFailure("machine-typing LP assigned two types")
            types[i - 1] = t
        elif v != 0:
            raise ExtractionFailure(
                "machine-typing LP produced a non-integral basic optimum"
            )
    if any(t == 0 for t in types):
        raise ExtractionFailure("machine-typing LP left a machine untyped")
    pin_cost = sum(
        (
            base.machines[i - 1].activation[t - 1]
            for (i, t), v in pins.items()
            if v == 1
        ),
        Fraction(0),
    )
    if res.objective + pin_cost > base.budget:
        raise ExtractionFailure("machine typing exceeded the activation budget")
    return types


def assemble_solution(
    rinst: RoundedInstance,
    model: MilpModel,
    temp: list[TempMachine],
    mu_machines: dict[int, TempMachine],
    types: list[int],
    y_assign: list[int],
) -> Solution:
    """Injective mapping of actual machines onto matching real indices."""
    base = rinst.base
    guess = model.guess
    slots: dict[tuple[int, int], list[int]] = {}
    for i in range(1, base.m + 1):
        key = (rinst.speed_exponents[i - 1], types[i - 1])
        slots.setdefault(key, []).append(i)

    assignment = [0] * base.n
    actuals = [tm for tm in temp if tm.kind == "actual"]
    actuals.sort(key=_machine_order_key)
    for t, mu_m in mu_machines.items():
        mu_t = guess.mu[t - 1]
        key = (mu_m.config.speed_exponent, t)
        if mu_t not in slots.get(key, []):
            raise ExtractionFailure(
                f"lead machine of type {t} does not map onto machine {mu_t}"
            )
        slots[key].remove(mu_t)
        for j in mu_m.jobs:
            assignment[j - 1] = mu_t
    for tm in actuals:
        if tm.mu_type is not None:
            continue
        if not tm.jobs:
            continue  # empty machines need no real index
        key = (tm.config.speed_exponent, tm.config.machine_type)
        if not slots.get(key):
            raise ExtractionFailure(
                f"no machine of speed class {key[0]} left for type {key[1]}"
            )
        i = slots[key].pop(0)
        for j in tm.jobs:
            assignment[j - 1] = i

    placed = sum(1 for a in assignment if a)
    expected = sum(1 for t in y_assign if t > 0)
    if placed != expected:
        raise ExtractionFailure(
            f"placed {placed} jobs but the type assignment accepted {expected}"
        )
    return Solution(machine_types=tuple(types), assignment=tuple(assignment))


def extract_solution(
    rinst: RoundedInstance, model: MilpModel, msol: MilpSolution
) -> tuple[Solution, ExtractTrace]:
    """Full pipeline from an optimal relaxed solution to a feasible schedule."""
    eps = rinst.eps
    n_hat, np_hat, x_hat = round_counts(msol, model)
    y_assign, rejection = solve_lp_y(rinst, model, n_hat, np_hat)
    temp, mu_machines = build_temp_machines(model, msol, x_hat)
    sentinels = allocate_jobs(
        rinst, model, y_assign, n_hat, np_hat, temp, mu_machines
    )
    sentinel_empty = all(not s.jobs for s in sentinels)
    if not sentinel_empty:
        raise ExtractionFailure("sentinel machine received jobs")

    bound7 = pow1p(eps, 7)
    lemma7_max = None
    loads = []
    ok7 = True
    for tm in temp:
        w = config_w(tm.config, eps)
        loads.append((tm.config_index, tm.total, w))
        if tm.total > 0:
            if w == 0:
                ok7 = False
                continue
            ratio = tm.total / (bound7 * w)
            if lemma7_max is None or ratio > lemma7_max:
                lemma7_max = ratio
            if tm.total > bound7 * w:
                ok7 = False

    virtual_count, virtual_cfgs = reassign_virtual(rinst, model, temp, mu_machines)

    lemma8 = {}
    for t, mu_m in mu_machines.items():
        w = config_w(mu_m.config, eps)
        if w > 0:
            lemma8[t] = mu_m.total / w

    demands: dict[tuple[int, int], int] = {}
    for tm in temp:
        if tm.kind == "actual":
            key = (tm.config.speed_exponent, tm.config.machine_type)
            demands[key] = demands.get(key, 0) + 1
    types = solve_lp_z(rinst, model, demands)
    sol = assemble_solution(rinst, model, temp, mu_machines, types, y_assign)

    milp_rejection = Fraction(0)
    for cid, cls in enumerate(model.job_classes):
        v = msol.values.get(("y", cid, 0))
        if v:
            milp_rejection += cls.penalty * v
    if rejection > milp_rejection:
        raise ExtractionFailure(
            "job-to-type assignment costs more than the relaxed rejection total"
        )

    trace = ExtractTrace(
        rejection_cost=rejection,
        milp_rejection_cost=milp_rejection,
        virtual_count=virtual_count,
        virtual_config_indices=virtual_cfgs,
        lemma7_max_ratio=lemma7_max,
        lemma7_bound_ok=ok7,
        lemma8_ratios=lemma8,
        sentinel_empty=sentinel_empty,
        machine_loads=loads,
    )
    return sol, trace
