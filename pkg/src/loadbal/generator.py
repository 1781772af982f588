"""Deterministic pseudo-random instance generation.

Profiles:
    uniform    - general mix: machine types, budgets, mandatory and
                 rejectable jobs.
    related    - single type, zero activation costs: pure speed-based
                 load balancing.
    activation - two types where type 1 means "off" (zero activation cost,
                 size too large for any schedule) and type 2 costs against
                 a budget.
    rejection  - every job carries a finite penalty; zero activation costs.

Sizes, speeds and penalties are drawn from small rational pools: machines
come in a handful of models and jobs in a handful of shapes, which also
keeps configuration counts tame.  The same arguments always produce the
same instance.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .model import (
    MANDATORY,
    Epsilon,
    Instance,
    JobSpec,
    MachineSpec,
    ObjectiveParams,
)

PROFILES = ("uniform", "related", "activation", "rejection")

_SPEED_POOL = [
    Fraction(1),
    Fraction(3, 4),
    Fraction(2, 3),
    Fraction(1, 2),
    Fraction(1, 3),
    Fraction(1, 4),
]


def _speeds(rng: random.Random, m: int) -> list[Fraction]:
    tail = sorted((rng.choice(_SPEED_POOL) for _ in range(m - 1)), reverse=True)
    return [Fraction(1)] + tail


def _size_pool(rng: random.Random) -> list[Fraction]:
    pool = set()
    target = rng.randint(4, 6)
    while len(pool) < target:
        pool.add(Fraction(rng.randint(1, 10), rng.choice((1, 2, 3))))
    return sorted(pool)


def _penalty_pool(rng: random.Random) -> list[Fraction]:
    return sorted({Fraction(rng.randint(2, 24), 2) for _ in range(4)})


def generate_instance(
    seed: int,
    n: int,
    m: int,
    tau: int,
    profile: str,
    epsilon_inverse: int = 2,
    psi: Fraction | None = None,
    phi: Fraction | None = None,
) -> Instance:
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r} (choose from {PROFILES})")
    if n < 0 or m < 1 or tau < 1:
        raise ValueError("need n >= 0, m >= 1, tau >= 1")
    # string seeds hash stably across processes (unlike tuples)
    rng = random.Random(f"{seed}:{n}:{m}:{tau}:{profile}")

    if profile == "related":
        tau = 1
    if profile == "activation":
        tau = 2

    speeds = _speeds(rng, m)
    pools = [_size_pool(rng) for _ in range(tau)]
    pen_pool = _penalty_pool(rng)

    if profile == "activation":
        huge = 4 * n * max(pools[1]) * (1 + Fraction(1, 1)) / min(speeds)
        jobs = tuple(
            JobSpec(sizes=(huge, rng.choice(pools[1])), penalty=MANDATORY)
            for _ in range(n)
        )
        machines = []
        costs = [Fraction(rng.randint(1, 3)) for _ in range(m)]
        for s, a in zip(speeds, costs):
            machines.append(MachineSpec(speed=s, activation=(Fraction(0), a)))
        budget = max(min(costs), sum(costs, Fraction(0)) / 2)
        default_psi, default_phi = Fraction(1), Fraction(2)
    else:
        jobs = []
        for _ in range(n):
            sizes = tuple(rng.choice(pools[t]) for t in range(tau))
            if profile == "rejection":
                penalty = rng.choice(pen_pool)
            elif profile == "related":
                penalty = MANDATORY if rng.random() < 0.8 else rng.choice(pen_pool)
            else:
                penalty = MANDATORY if rng.random() < 0.5 else rng.choice(pen_pool)
            jobs.append(JobSpec(sizes=sizes, penalty=penalty))
        jobs = tuple(jobs)
        machines = []
        if profile == "uniform" and tau > 1:
            acts = [
                tuple(Fraction(rng.randint(0, 3)) for _ in range(tau))
                for _ in range(m)
            ]
            min_total = sum((min(a) for a in acts), Fraction(0))
            budget = min_total + rng.randint(0, m)
        else:
            acts = [tuple(Fraction(0) for _ in range(tau)) for _ in range(m)]
            budget = Fraction(0)
        for s, a in zip(speeds, acts):
            machines.append(MachineSpec(speed=s, activation=a))
        if profile == "related":
            default_psi, default_phi = Fraction(1), Fraction(2)
        elif profile == "rejection":
            default_psi = rng.choice((Fraction(0), Fraction(1)))
            default_phi = Fraction(rng.choice((2, 3)))
        else:
            default_psi = rng.choice((Fraction(0), Fraction(1, 2), Fraction(1)))
            default_phi = Fraction(rng.choice((2, 3)))

    return Instance(
        machines=tuple(machines),
        jobs=jobs,
        tau=tau,
        budget=budget,
        objective=ObjectiveParams(
            psi=default_psi if psi is None else Fraction(psi),
            phi=default_phi if phi is None else Fraction(phi),
        ),
        epsilon=Epsilon(epsilon_inverse),
    )
