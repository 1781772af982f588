"""Benchmark harness: solve a corpus of instance files and emit a CSV.

The column set is a stable contract (see BENCH_COLUMNS).  All costs and
ratios are exact rationals serialized as p/q strings; only wall_time_s is
non-deterministic, and --stable-time replaces it with "-" so reports can
be compared byte for byte.
"""

from __future__ import annotations

import csv
import io
import multiprocessing
import time
from dataclasses import dataclass
from fractions import Fraction

from .model import evaluate_objective, format_rational, load_instance_file
from .oracle import brute_force_optimal, greedy_baseline
from .pipeline import SolveOptions, solve_instance

BENCH_COLUMNS = [
    "file",
    "n",
    "m",
    "tau",
    "epsilon_inverse",
    "psi",
    "phi",
    "status",
    "oracle_obj",
    "greedy_obj",
    "pipeline_obj",
    "pipeline_source",
    "ratio_pipeline_oracle",
    "ratio_greedy_oracle",
    "milp_value",
    "guesses",
    "models",
    "lemma7_max",
    "lemma8_max",
    "virtual_machines",
    "wall_time_s",
    "error",
]


@dataclass
class BenchJob:
    path: str
    gamma: int | None
    oracle_cap: int
    with_oracle: bool
    stable_time: bool
    node_limit: int = 10**6
    epsilon_inverse: int | None = None


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Fraction):
        return format_rational(x)
    return str(x)


def bench_one(job: BenchJob) -> dict:
    row = {c: "" for c in BENCH_COLUMNS}
    row["file"] = job.path.rsplit("/", 1)[-1]
    start = time.perf_counter()
    try:
        inst = load_instance_file(job.path)
        row.update(
            n=inst.n,
            m=inst.m,
            tau=inst.tau,
            epsilon_inverse=inst.epsilon.inverse,
            psi=_fmt(inst.objective.psi),
            phi=_fmt(inst.objective.phi),
        )
        result = solve_instance(
            inst,
            SolveOptions(
                gamma=job.gamma,
                node_limit=job.node_limit,
                epsilon_inverse=job.epsilon_inverse,
            ),
        )
        best = result.best
        row["status"] = "ok"
        row["pipeline_obj"] = _fmt(best.cost_original)
        row["pipeline_source"] = best.source
        row["milp_value"] = _fmt(best.milp_value)
        row["guesses"] = result.stats["guesses"]
        row["models"] = result.stats["models"]
        if best.extract_trace is not None:
            tr = best.extract_trace
            row["lemma7_max"] = _fmt(tr.lemma7_max_ratio)
            if tr.lemma8_ratios:
                row["lemma8_max"] = _fmt(max(tr.lemma8_ratios.values()))
            row["virtual_machines"] = tr.virtual_count
        inst_n = result.instance
        greedy = greedy_baseline(inst_n)
        greedy_obj = evaluate_objective(inst_n, greedy).objective
        row["greedy_obj"] = _fmt(greedy_obj)
        if job.with_oracle:
            work = inst_n.tau**inst_n.m * (inst_n.m + 1) ** inst_n.n
            if work <= job.oracle_cap:
                _, bd = brute_force_optimal(inst_n, cap=job.oracle_cap)
                row["oracle_obj"] = _fmt(bd.objective)
                if bd.objective > 0:
                    row["ratio_pipeline_oracle"] = _fmt(
                        best.cost_original / bd.objective
                    )
                    row["ratio_greedy_oracle"] = _fmt(greedy_obj / bd.objective)
                elif best.cost_original == 0:
                    row["ratio_pipeline_oracle"] = _fmt(Fraction(1))
                    row["ratio_greedy_oracle"] = _fmt(
                        Fraction(1) if greedy_obj == 0 else None
                    )
    except Exception as exc:  # noqa: BLE001 - per-file errors become a column
        row["status"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["wall_time_s"] = (
        "-" if job.stable_time else f"{time.perf_counter() - start:.3f}"
    )
    return row


def run_bench(
    paths: list[str],
    gamma: int | None = None,
    jobs: int = 1,
    oracle_cap: int = 10**7,
    with_oracle: bool = True,
    stable_time: bool = False,
    node_limit: int = 10**6,
    epsilon_inverse: int | None = None,
) -> list[dict]:
    work = [
        BenchJob(
            path=p,
            gamma=gamma,
            oracle_cap=oracle_cap,
            with_oracle=with_oracle,
            stable_time=stable_time,
            node_limit=node_limit,
            epsilon_inverse=epsilon_inverse,
        )
        for p in sorted(paths)
    ]
    if jobs > 1 and len(work) > 1:
        with multiprocessing.Pool(jobs) as pool:
            rows = pool.map(bench_one, work)
    else:
        rows = [bench_one(j) for j in work]
    return rows


def summary_row(rows: list[dict]) -> dict:
    out = {c: "" for c in BENCH_COLUMNS}
    out["file"] = "SUMMARY"
    out["status"] = f"{sum(1 for r in rows if r['status'] == 'ok')}/{len(rows)} ok"
    ratios = [
        Fraction(r["ratio_pipeline_oracle"])
        for r in rows
        if r["ratio_pipeline_oracle"]
    ]
    if ratios:
        out["ratio_pipeline_oracle"] = _fmt(max(ratios))
    gratios = [
        Fraction(r["ratio_greedy_oracle"]) for r in rows if r["ratio_greedy_oracle"]
    ]
    if gratios:
        out["ratio_greedy_oracle"] = _fmt(max(gratios))
    lem7 = [Fraction(r["lemma7_max"]) for r in rows if r["lemma7_max"]]
    if lem7:
        out["lemma7_max"] = _fmt(max(lem7))
    errors = sum(1 for r in rows if r["status"] == "error")
    out["error"] = f"{errors} errors" if errors else ""
    return out


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
