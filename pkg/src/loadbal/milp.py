"""Block-structured MILP for a fixed guess, solved exactly.

Variables (keys):
    ("z", i, t)      machine i activated as type t            (fractional)
    ("m", s, t)      machines of speed exponent s and type t  (integer in a window)
    ("y", c, t)      jobs of class c sent to type t, t=0 rejects (fractional)
    ("n", zeta, t)   class-(zeta,t) jobs placed in large role (integer in a window)
    ("np", zeta, t)  class-(zeta,t) jobs placed in small role (integer in a window)
    ("x", k)         machines following configuration k       (integer when heavy)

Identical jobs (same per-type size exponents and penalty) share one y block
with a count right-hand side; the extraction stage never reads per-job y
values, so this aggregation is value-preserving.  Branch-and-bound is
best-first over the integer-marked variables with an exact LP relaxation
at every node.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from . import simplex
from .configs import (
    Configuration,
    config_small_area,
    config_w,
    size_classes,
)
from .guessing import Guess
from .model import NodeLimit
from .rounding import RoundedInstance, pow1p

Key = tuple

EQ, LE, GE = simplex.EQ, simplex.LE, simplex.GE


@dataclass(frozen=True)
class JobClass:
    exponents: tuple[int, ...]  # rounded size exponent per type
    penalty: Fraction | None  # None = mandatory
    jobs: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.jobs)


@dataclass
class MilpModel:
    keys: list[Key]
    objective: dict[Key, Fraction]
    integral: list[Key]
    rows: list[tuple[dict[Key, Fraction], str, Fraction]]
    obj_constant: Fraction
    pins: dict[Key, Fraction]
    # metadata consumed by the extraction stage and by tests
    guess: Guess
    gamma: int
    configs: list[Configuration]
    job_classes: list[JobClass]
    zeta: dict[int, list[int]]
    band: dict[int, list[int]]  # cover-band config indices per active type


@dataclass
class MilpSolution:
    status: str  # "optimal" | "infeasible" | "cutoff"
    objective: Fraction | None
    values: dict[Key, Fraction] | None


def job_classes_of(rinst: RoundedInstance) -> list[JobClass]:
    """Group interchangeable jobs: equal size exponents on every type and
    equal penalty."""
    groups: dict[tuple, list[int]] = {}
    for j in range(1, rinst.base.n + 1):
        job = rinst.base.jobs[j - 1]
        pen = None if job.is_mandatory else job.penalty
        key = (rinst.size_exponents[j - 1], pen)
        groups.setdefault(key, []).append(j)
    ordered = sorted(
        groups.items(),
        key=lambda kv: (kv[0][0], kv[0][1] is None, kv[0][1] or 0),
    )
    return [
        JobClass(exponents=exps, penalty=pen, jobs=tuple(jobs))
        for (exps, pen), jobs in ordered
    ]


def _config_sort_key(c: Configuration):
    return (
        c.machine_type,
        -c.speed_exponent,
        c.w_exponent is not None,
        c.w_exponent or 0,
        c.large_counts,
        c.r_steps,
    )


def reduce_configs(
    configs: Iterable[Configuration],
    zeta_sets: dict[int, set[int]],
) -> list[Configuration]:
    """Drop columns the solver can never use: configurations carrying large
    jobs outside the possible set zeta(t) (their count constraints force
    x_C = 0), and all but the maximal-r configuration per (t, s, w, counts)
    (same cost and coefficients, weakly more small-area: dominant)."""
    best: dict[tuple, Configuration] = {}
    for c in configs:
        if c.machine_type not in zeta_sets:
            continue
        allowed = zeta_sets[c.machine_type]
        if any(z not in allowed for z, _ in c.large_counts):
            continue
        key = (c.machine_type, c.speed_exponent, c.w_exponent, c.large_counts)
        prev = best.get(key)
        if prev is None or c.r_steps > prev.r_steps:
            best[key] = c
    return sorted(best.values(), key=_config_sort_key)


def build_milp(
    rinst: RoundedInstance,
    guess: Guess,
    configs: Sequence[Configuration],
    gamma: int,
    relaxed_counts: bool = False,
) -> MilpModel:
    base = rinst.base
    eps = rinst.eps
    tau = base.tau
    psi = base.objective.psi
    phi = base.objective.phi_int
    active = guess.active_types()

    zeta = {t: size_classes(rinst, guess, t) for t in active}
    zeta_sets = {t: set(zs) for t, zs in zeta.items()}
    configs = reduce_configs(configs, zeta_sets)
    classes = job_classes_of(rinst)

    o_value = guess.o_value(eps)
    loads = {t: guess.load_value(t, eps) for t in active}
    mu_speed = {t: rinst.speed_value(guess.mu[t - 1]) for t in active}
    eps_gamma = eps.value**gamma
    heavy_cut = {t: eps.value ** (gamma**3) * loads[t] * mu_speed[t] for t in active}

    pins: dict[Key, Fraction] = {}
    conflict = False
    for t in active:
        mu_t = guess.mu[t - 1]
        for key, val in [(("z", mu_t, t), Fraction(1))] + [
            (("z", mu_t, t2), Fraction(0)) for t2 in active if t2 != t
        ] + [(("z", i, t), Fraction(0)) for i in range(1, mu_t)]:
            if pins.setdefault(key, val) != val:
                conflict = True

    keys: list[Key] = []
    objective: dict[Key, Fraction] = {}
    integral: list[Key] = []

    for i in range(1, base.m + 1):
        for t in active:
            keys.append(("z", i, t))
    speed_exps = rinst.speed_classes()
    for s in speed_exps:
        s_val = pow1p(eps, s)
        for t in active:
            keys.append(("m", s, t))
            if mu_speed[t] >= s_val >= mu_speed[t] * eps_gamma:
                integral.append(("m", s, t))
    admissible: dict[int, list[int]] = {}
    for cid, cls in enumerate(classes):
        ts = [t for t in active if cls.exponents[t - 1] in zeta_sets[t]]
        admissible[cid] = ts
        if cls.penalty is not None:
            keys.append(("y", cid, 0))
            objective[("y", cid, 0)] = cls.penalty
        for t in ts:
            keys.append(("y", cid, t))
    for t in active:
        mu_l = mu_speed[t] * loads[t] * eps_gamma
        for z in zeta[t]:
            for fam in ("n", "np"):
                keys.append((fam, z, t))
                if pow1p(eps, z) >= mu_l:
                    integral.append((fam, z, t))
    for k, c in enumerate(configs):
        keys.append(("x", k))
        if psi != 1 and not c.is_zero:
            objective[("x", k)] = (1 - psi) * (
                config_w(c, eps) / pow1p(eps, c.speed_exponent)
            ) ** phi
        if config_w(c, eps) >= heavy_cut[c.machine_type]:
            integral.append(("x", k))

    rows: list[tuple[dict[Key, Fraction], str, Fraction]] = []
    one = Fraction(1)

    # machine assignment block
    for i in range(1, base.m + 1):
        rows.append(({("z", i, t): one for t in active}, EQ, one))
    for s in speed_exps:
        members = rinst.machines_in_class(s)
        for t in active:
            coeffs: dict[Key, Fraction] = {("z", i, t): one for i in members}
            coeffs[("m", s, t)] = -one
            rows.append((coeffs, EQ, Fraction(0)))
        rows.append(
            ({("m", s, t): one for t in active}, EQ, Fraction(len(members)))
        )
    budget_row = {
        ("z", i, t): base.machines[i - 1].activation[t - 1]
        for i in range(1, base.m + 1)
        for t in active
        if base.machines[i - 1].activation[t - 1] != 0
    }
    rows.append((budget_row, LE, base.budget))

    # job assignment block
    for cid, cls in enumerate(classes):
        coeffs = {("y", cid, t): one for t in admissible[cid]}
        if cls.penalty is not None:
            coeffs[("y", cid, 0)] = one
        rows.append((coeffs, EQ, Fraction(cls.count)))
    for t in active:
        for z in zeta[t]:
            coeffs = {
                ("y", cid, t): one
                for cid, cls in enumerate(classes)
                if cls.exponents[t - 1] == z and t in admissible[cid]
            }
            coeffs[("n", z, t)] = -one
            coeffs[("np", z, t)] = -one
            rows.append((coeffs, LE, Fraction(0)))

    # configuration block: one pass over the columns builds every row group
    band: dict[int, list[int]] = {t: [] for t in active}
    band_window = {}
    for t in active:
        lo = mu_speed[t] * loads[t]
        band_window[t] = (
            lo,
            pow1p(eps, 3) * lo,
            rinst.speed_exponents[guess.mu[t - 1] - 1],
        )
    cap_rows: dict[tuple[int, int], dict] = {}
    count_rows: dict[tuple[int, int], dict] = {}
    donor_groups: dict[int, dict[int, list]] = {t: {} for t in active}
    for k, c in enumerate(configs):
        t = c.machine_type
        lo, hi, s_mu_exp = band_window[t]
        if c.speed_exponent == s_mu_exp and lo <= config_w(c, eps) <= hi:
            band[t].append(k)
        cap_rows.setdefault((c.speed_exponent, t), {})[("x", k)] = one
        for zz, cnt in c.large_counts:
            count_rows.setdefault((zz, t), {})[("x", k)] = Fraction(cnt)
        if not c.is_zero:
            donor_groups[t].setdefault(c.w_exponent, []).append(
                (("x", k), config_small_area(c, eps))
            )
    for t in active:
        rows.append(({("x", k): one for k in band[t]}, GE, one))
    for (s, t), coeffs in sorted(cap_rows.items()):
        coeffs[("m", s, t)] = -one
        rows.append((coeffs, LE, Fraction(0)))
    count_sense = LE if relaxed_counts else EQ
    for t in active:
        for z in zeta[t]:
            coeffs = count_rows.get((z, t), {})
            coeffs[("n", z, t)] = -one
            if relaxed_counts:
                coeffs = {k: -v for k, v in coeffs.items()}  # n <= sum l_max x
            rows.append((coeffs, count_sense, Fraction(0)))
    all_zetas = sorted({z for t in active for z in zeta[t]})
    for t in active:
        # eps^gamma * w > size is monotone in the w exponent: per z, donors
        # are the groups above a boundary exponent
        group_exps = sorted(donor_groups[t], reverse=True)
        for z in all_zetas:
            size = pow1p(eps, z)
            coeffs = {
                ("np", zz, t): pow1p(eps, zz) for zz in zeta[t] if zz >= z
            }
            if not coeffs:
                continue
            for w_exp in group_exps:
                if eps_gamma * pow1p(eps, w_exp) <= size:
                    break
                for key, area in donor_groups[t][w_exp]:
                    coeffs[key] = -area
            rows.append((coeffs, LE, Fraction(0)))

    if conflict:
        rows.append(({}, EQ, one))  # pin conflict: trivially infeasible

    return MilpModel(
        keys=keys,
        objective=objective,
        integral=integral,
        rows=rows,
        obj_constant=psi * o_value,
        pins=pins,
        guess=guess,
        gamma=gamma,
        configs=list(configs),
        job_classes=classes,
        zeta=zeta,
        band=band,
    )


# ---------------------------------------------------------------------------
# solving


def _materialize(model: MilpModel, extra_rows: Sequence[tuple[Key, str, Fraction]]):
    """Substitute pinned variables and map keys to dense indices."""
    index: dict[Key, int] = {}
    for k in model.keys:
        if k not in model.pins:
            index[k] = len(index)
    rows = []
    for coeffs, sense, rhs in model.rows:
        d = {}
        shift = Fraction(0)
        for k, c in coeffs.items():
            if k in model.pins:
                shift += c * model.pins[k]
            else:
                d[index[k]] = c
        rows.append((d, sense, rhs - shift))
    for key, sense, bound in extra_rows:
        if key in model.pins:
            rows.append(({}, sense, bound - model.pins[key]))
        else:
            rows.append(({index[key]: Fraction(1)}, sense, Fraction(bound)))
    obj = {}
    const = model.obj_constant
    for k, c in model.objective.items():
        if k in model.pins:
            const += c * model.pins[k]
        else:
            obj[index[k]] = c
    return index, obj, rows, const


def solve_lp(
    model: MilpModel, extra_rows: Sequence[tuple[Key, str, Fraction]] = ()
) -> MilpSolution:
    """Exact optimum of the LP relaxation (integrality marks ignored)."""
    index, obj, rows, const = _materialize(model, extra_rows)
    res = simplex.solve_lp_arrays(len(index), obj, rows)
    if res.status != simplex.OPTIMAL:
        return MilpSolution(status="infeasible", objective=None, values=None)
    values = dict(model.pins)
    for k, i in index.items():
        values[k] = res.values[i]
    return MilpSolution(
        status="optimal", objective=res.objective + const, values=values
    )


def solve_milp(
    model: MilpModel,
    node_limit: int = 10**6,
    cutoff: Fraction | None = None,
    root: MilpSolution | None = None,
) -> MilpSolution:
    """Best-first branch and bound over the integer-marked variables.

    Branches on the most fractional marked variable, floor child first.
    With a cutoff, search stops below it and the result may be "cutoff"
    (no solution strictly better than the cutoff exists).  ``root`` may
    carry an already solved relaxation of the unbranched model.
    """
    marked = [k for k in model.integral if k not in model.pins]
    if root is None:
        root = solve_lp(model)
    if root.status != "optimal":
        return MilpSolution(status="infeasible", objective=None, values=None)
    best_val = cutoff
    best_vals = None
    nodes = 1
    seq = 0
    heap = [(root.objective, seq, (), root.values)]
    while heap:
        bound, _, extra, values = heapq.heappop(heap)
        if best_val is not None and bound >= best_val:
            break  # min-heap: every remaining node is at least as bad
        frac_key = None
        frac_dist = Fraction(0)
        for k in marked:
            f = values[k] - math.floor(values[k])
            if f:
                d = min(f, 1 - f)
                if d > frac_dist:
                    frac_key, frac_dist = k, d
        if frac_key is None:
            best_val, best_vals = bound, values
            continue
        floor_v = math.floor(values[frac_key])
        for sense, b in ((LE, floor_v), (GE, floor_v + 1)):
            nodes += 1
            if nodes > node_limit:
                raise NodeLimit(f"branch-and-bound exceeded {node_limit} nodes")
            constraint = (frac_key, sense, Fraction(b))
            child = solve_lp(model, (*extra, constraint))
            if child.status != "optimal":
                continue
            if best_val is not None and child.objective >= best_val:
                continue
            seq += 1
            heapq.heappush(
                heap, (child.objective, seq, (*extra, constraint), child.values)
            )
    if best_vals is not None:
        return MilpSolution(status="optimal", objective=best_val, values=best_vals)
    if cutoff is not None:
        return MilpSolution(status="cutoff", objective=None, values=None)
    return MilpSolution(status="infeasible", objective=None, values=None)


def integer_census(model: MilpModel) -> dict[str, int]:
    """Number of integer-marked variables per family."""
    out = {"m": 0, "n": 0, "np": 0, "x": 0}
    for k in model.integral:
        out[k[0]] += 1
    return out


def dump_lp_text(model: MilpModel) -> str:
    """Model in LP text format for cross-checks with external solvers.

    Coefficients are exact rationals rendered as decimals where possible;
    non-terminating ones carry the exact value in a trailing comment.
    """

    def nm(k: Key) -> str:
        parts = [k[0]] + [
            ("n" + str(-p) if isinstance(p, int) and p < 0 else str(p))
            for p in k[1:]
        ]
        return "_".join(parts)

    def num(x: Fraction) -> str:
        f = float(x)
        return repr(f)

    lines = ["\\ exact-rational model; decimal coefficients are rounded views"]
    lines.append("Minimize")
    terms = [f" {num(c)} {nm(k)}" for k, c in model.objective.items() if c]
    lines.append(" obj:" + (" +".join(terms) if terms else " 0 ") )
    lines.append(f"\\ objective constant: {model.obj_constant}")
    lines.append("Subject To")
    sense_map = {LE: "<=", GE: ">=", EQ: "="}
    for idx, (coeffs, sense, rhs) in enumerate(model.rows):
        terms = [f"{num(c)} {nm(k)}" for k, c in coeffs.items()]
        lines.append(
            f" c{idx}: " + " + ".join(terms or ["0 zero_"])
            + f" {sense_map[sense]} {num(rhs)}"
        )
    lines.append("Bounds")
    for k, v in model.pins.items():
        lines.append(f" {nm(k)} = {num(v)}")
    lines.append("Generals")
    for k in model.integral:
        if k not in model.pins:
            lines.append(f" {nm(k)}")
    lines.append("End")
    return "\n".join(lines) + "\n"
