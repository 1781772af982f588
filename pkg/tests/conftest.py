import random
from fractions import Fraction

import pytest

from loadbal.model import (
    MANDATORY,
    Epsilon,
    Instance,
    JobSpec,
    MachineSpec,
    ObjectiveParams,
    Solution,
)


def make_instance(
    speeds,
    jobs,
    tau=1,
    budget=0,
    activation=None,
    psi=1,
    phi=2,
    epsilon_inverse=2,
):
    """Compact instance builder.

    ``jobs`` entries are (sizes, penalty) with penalty None meaning
    mandatory; ``activation`` defaults to all zeros.
    """
    machines = []
    for i, s in enumerate(speeds):
        act = activation[i] if activation else (0,) * tau
        machines.append(
            MachineSpec(
                speed=Fraction(s), activation=tuple(Fraction(a) for a in act)
            )
        )
    job_specs = []
    for sizes, penalty in jobs:
        job_specs.append(
            JobSpec(
                sizes=tuple(Fraction(p) for p in sizes),
                penalty=MANDATORY if penalty is None else Fraction(penalty),
            )
        )
    return Instance(
        machines=tuple(machines),
        jobs=tuple(job_specs),
        tau=tau,
        budget=Fraction(budget),
        objective=ObjectiveParams(psi=Fraction(psi), phi=Fraction(phi)),
        epsilon=Epsilon(epsilon_inverse),
    )


@pytest.fixture
def t1():
    """Two speed-1 machines, three mandatory jobs 4, 2, 2; makespan objective."""
    return make_instance(
        speeds=[1, 1],
        jobs=[((4,), None), ((2,), None), ((2,), None)],
        psi=1,
        phi=2,
    )


@pytest.fixture
def t2():
    """One machine; job 3 (penalty 5) and job 1 (penalty 2); sum-of-squares."""
    return make_instance(
        speeds=[1],
        jobs=[((3,), 5), ((1,), 2)],
        psi=0,
        phi=2,
    )


def random_small_instance(rng: random.Random, max_n=5, max_m=3, max_tau=2):
    """A random well-formed instance for property tests."""
    tau = rng.randint(1, max_tau)
    m = rng.randint(1, max_m)
    n = rng.randint(1, max_n)
    speeds = sorted(
        (Fraction(rng.randint(1, 4), rng.randint(1, 2)) for _ in range(m)),
        reverse=True,
    )
    speeds = [s / speeds[0] for s in speeds]
    jobs = []
    for _ in range(n):
        sizes = tuple(
            Fraction(rng.randint(1, 9), rng.choice((1, 2))) for _ in range(tau)
        )
        penalty = (
            None if rng.random() < 0.5 else Fraction(rng.randint(1, 12), 2)
        )
        jobs.append((sizes, penalty))
    if tau > 1 or rng.random() < 0.4:
        activation = [
            tuple(Fraction(rng.randint(0, 2)) for _ in range(tau))
            for _ in range(m)
        ]
        min_total = sum(min(a) for a in activation)
        budget = min_total + rng.randint(0, m)
    else:
        activation = [(Fraction(0),) * tau for _ in range(m)]
        budget = 0
    return make_instance(
        speeds=speeds,
        jobs=jobs,
        tau=tau,
        budget=budget,
        activation=activation,
        psi=rng.choice((Fraction(0), Fraction(1, 2), Fraction(1))),
        phi=rng.choice((2, 3)),
        epsilon_inverse=rng.choice((2, 4)),
    )


def random_feasible_solution(rng: random.Random, inst) -> Solution:
    """A random feasible solution (budget-aware types, mandatory respected)."""
    for _ in range(200):
        types = tuple(rng.randint(1, inst.tau) for _ in range(inst.m))
        total = sum(
            inst.machines[i].activation[t - 1] for i, t in enumerate(types)
        )
        if total <= inst.budget:
            break
    else:
        types = tuple(
            min(range(1, inst.tau + 1), key=lambda t: mach.activation[t - 1])
            for mach in inst.machines
        )
    assignment = tuple(
        rng.randint(1, inst.m)
        if inst.jobs[j].is_mandatory
        else rng.randint(0, inst.m)
        for j in range(inst.n)
    )
    return Solution(machine_types=types, assignment=assignment)
