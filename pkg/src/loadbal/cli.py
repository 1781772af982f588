"""Command line interface: solve | oracle | generate | verify | bench.

Exit codes: 0 success; 2 parse or validation failure; 3 no feasible
solution (or every guess failed); 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import bench as bench_mod
from .configs import enumerate_configurations
from .generator import PROFILES, generate_instance
from .milp import build_milp, dump_lp_text
from .model import (
    Infeasible,
    TooLarge,
    dump_canonical_json,
    evaluate_objective,
    format_rational,
    instance_to_json,
    load_instance_file,
    load_solution_file,
    parse_rational,
    solution_to_json,
    validate_instance,
    validate_solution,
)
from .oracle import brute_force_nice_optimal, brute_force_optimal
from .pipeline import SolveOptions, solve_instance
from .rounding import round_instance, rounded_to_json


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_instance_or_exit(path: str):
    try:
        inst = load_instance_file(path)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        raise SystemExit(2)
    problems = validate_instance(inst)
    if problems:
        for p in problems:
            print(f"error: {path}: {p}", file=sys.stderr)
        raise SystemExit(2)
    return inst


def _trace_json(result) -> dict:
    best = result.best
    out = {
        "source": best.source,
        "gamma": result.gamma,
        "objective_original": format_rational(best.cost_original),
        "objective_rounded": format_rational(best.cost_rounded),
        "stats": result.stats,
    }
    if best.cost_original:
        out["rounding_factor"] = format_rational(
            best.cost_rounded / best.cost_original
        )
    if best.guess is not None:
        out["guess"] = {
            "o_exponent": best.guess.o_exponent,
            "mu": list(best.guess.mu),
            "load_steps": list(best.guess.load_steps),
        }
    if best.milp_value is not None:
        out["milp_value"] = format_rational(best.milp_value)
        if best.milp_value:
            out["extraction_factor"] = format_rational(
                best.cost_rounded / best.milp_value
            )
    if best.extract_trace is not None:
        tr = best.extract_trace
        out["extraction"] = {
            "rejection_cost": format_rational(tr.rejection_cost),
            "milp_rejection_cost": format_rational(tr.milp_rejection_cost),
            "virtual_machines": tr.virtual_count,
            "lemma7_max_ratio": None
            if tr.lemma7_max_ratio is None
            else format_rational(tr.lemma7_max_ratio),
            "lemma7_bound_ok": tr.lemma7_bound_ok,
            "lemma8_ratios": {
                str(t): format_rational(v) for t, v in tr.lemma8_ratios.items()
            },
            "sentinel_empty": tr.sentinel_empty,
        }
    if result.oracle_objective is not None:
        out["oracle_objective"] = format_rational(result.oracle_objective)
        if result.oracle_ratio is not None:
            out["oracle_ratio"] = format_rational(result.oracle_ratio)
    return out


def cmd_solve(args) -> int:
    inst = _load_instance_or_exit(args.instance)
    options = SolveOptions(
        gamma=args.gamma,
        node_limit=args.node_limit,
        prune=not args.no_prune,
        pre_specified=args.pre_specified_types,
        config_cap=args.config_cap,
        oracle_check=args.oracle_check,
        epsilon_inverse=args.epsilon_inverse,
    )
    try:
        result = solve_instance(inst, options)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Infeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    best = result.best
    _write(
        dump_canonical_json(solution_to_json(best.solution, best.cost_original)),
        args.output,
    )
    if args.oracle_check and result.oracle_ratio is not None:
        print(
            f"oracle objective {format_rational(result.oracle_objective)}, "
            f"ratio {format_rational(result.oracle_ratio)} "
            f"(~{float(result.oracle_ratio):.4f})",
            file=sys.stderr,
        )
    if args.trace:
        _write(dump_canonical_json(_trace_json(result)), args.trace)
    if args.dump_rounded:
        _write(
            dump_canonical_json(rounded_to_json(round_instance(result.instance))),
            args.dump_rounded,
        )
    if args.dump_lp:
        if best.guess is None:
            print("warning: best solution has no model to dump", file=sys.stderr)
        else:
            rinst = result.rounded
            configs = enumerate_configurations(
                rinst,
                best.guess,
                result.gamma,
                cap=args.config_cap,
                restrict_to_caps=True,
            )
            model = build_milp(rinst, best.guess, configs, result.gamma)
            _write(dump_lp_text(model), args.dump_lp)
    return 0


def cmd_oracle(args) -> int:
    inst = _load_instance_or_exit(args.instance)
    try:
        if args.nice:
            sol, breakdown = brute_force_nice_optimal(inst, cap=args.cap)
        else:
            sol, breakdown = brute_force_optimal(inst, cap=args.cap)
    except Infeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except TooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write(
        dump_canonical_json(solution_to_json(sol, breakdown.objective)), args.output
    )
    return 0


def cmd_generate(args) -> int:
    try:
        inst = generate_instance(
            seed=args.seed,
            n=args.n,
            m=args.m,
            tau=args.tau,
            profile=args.profile,
            epsilon_inverse=args.epsilon_inverse,
            psi=None if args.psi is None else parse_rational(args.psi),
            phi=None if args.phi is None else parse_rational(args.phi),
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write(dump_canonical_json(instance_to_json(inst)), args.output)
    return 0


def cmd_verify(args) -> int:
    inst = _load_instance_or_exit(args.instance)
    try:
        sol, claimed = load_solution_file(args.solution)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {args.solution}: {exc}", file=sys.stderr)
        return 2
    problems = validate_solution(inst, sol)
    if problems:
        for p in problems:
            print(f"infeasible: {p}", file=sys.stderr)
        return 4
    breakdown = evaluate_objective(inst, sol)
    if breakdown.objective != claimed:
        print(
            f"cost mismatch: solution file claims {format_rational(claimed)} "
            f"but the objective is {format_rational(breakdown.objective)}",
            file=sys.stderr,
        )
        return 4
    print(
        f"ok: objective {format_rational(breakdown.objective)} "
        f"(F = {format_rational(breakdown.f_value)}, "
        f"rejection = {format_rational(breakdown.rejection_total)})"
    )
    return 0


def cmd_bench(args) -> int:
    if not os.path.isdir(args.corpus):
        print(f"error: {args.corpus} is not a directory", file=sys.stderr)
        return 2
    paths = [
        os.path.join(args.corpus, name)
        for name in sorted(os.listdir(args.corpus))
        if name.endswith(".json")
    ]
    rows = bench_mod.run_bench(
        paths,
        gamma=args.gamma,
        jobs=args.jobs,
        oracle_cap=args.oracle_cap,
        with_oracle=not args.no_oracle,
        stable_time=args.stable_time,
        node_limit=args.node_limit,
        epsilon_inverse=args.epsilon_inverse,
    )
    if rows:
        rows.append(bench_mod.summary_row(rows))
    _write(bench_mod.rows_to_csv(rows), args.output)
    return 0


def _add_common_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=int, default=None, help="large-job threshold exponent; values below 10 trade the formal bound for tractability (practical mode)")
    p.add_argument("--epsilon-inverse", type=int, default=None, help="override the instance's 1/eps")
    p.add_argument("--node-limit", type=int, default=10**6, help="branch-and-bound node cap")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="loadbal",
        description="Approximation solver for load balancing with machine "
        "types, activation budgets and job rejection (exact rational arithmetic).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the full approximation pipeline")
    p.add_argument("instance")
    p.add_argument("-o", "--output", default=None, help="solution JSON path (default stdout)")
    _add_common_solver_flags(p)
    p.add_argument("--pre-specified-types", action="store_true", help="skip per-type machine-index guessing (fixed-type machine model)")
    p.add_argument("--oracle-check", action="store_true", help="also report the exact-optimum ratio on small instances")
    p.add_argument("--no-prune", action="store_true", help="disable incumbent pruning of the guess stream")
    p.add_argument("--config-cap", type=int, default=200_000, help="configuration enumeration cap per guess")
    p.add_argument("--trace", default=None, help="write a per-stage trace JSON")
    p.add_argument("--dump-lp", default=None, help="dump the winning model in LP text format")
    p.add_argument("--dump-rounded", default=None, help="dump the rounded instance plus exponents annex")
    p.add_argument("--jobs", type=int, default=1, help="reserved for bench; solve runs single-process")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="exact optimum by exhaustive enumeration")
    p.add_argument("instance")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--nice", action="store_true", help="restrict to nice solutions")
    p.add_argument("--cap", type=int, default=10**8, help="enumeration work cap")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("generate", help="write a deterministic random instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--tau", type=int, default=1)
    p.add_argument("--profile", choices=PROFILES, default="uniform")
    p.add_argument("--epsilon-inverse", type=int, default=2)
    p.add_argument("--psi", default=None)
    p.add_argument("--phi", default=None)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="check a solution file against its instance")
    p.add_argument("instance")
    p.add_argument("solution")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="solve a corpus directory and emit CSV")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", default=None)
    _add_common_solver_flags(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--oracle-cap", type=int, default=10**7, help="skip the exact oracle above this work bound")
    p.add_argument("--no-oracle", action="store_true", help="skip oracle columns")
    p.add_argument("--stable-time", action="store_true", help="write '-' for wall time (byte-stable reports)")
    p.set_defaults(func=cmd_bench)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
