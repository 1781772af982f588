"""Geometric rounding: speeds down, sizes up, to integer powers of 1+eps.

Exponents are found by exact rational comparison (doubling search plus
bisection over exact powers), never by floating-point logarithms, so equal
rounded values always share the same canonical exponent.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import Instance, JobSpec, MachineSpec

_POW_CACHE: dict[tuple[int, int], Fraction] = {}


def pow1p(eps, exponent: int) -> Fraction:
    """(1+eps)^exponent as an exact rational (cached)."""
    key = (eps.inverse, exponent)
    value = _POW_CACHE.get(key)
    if value is None:
        value = _POW_CACHE[key] = eps.one_plus ** exponent
    return value


def floor_pow(x: Fraction, eps) -> int:
    """Largest integer e with (1+eps)^e <= x, for x > 0."""
    if x <= 0:
        raise ValueError("floor_pow requires x > 0")
    if x < 1:
        # (1+eps)^e <= x  <=>  (1+eps)^(-e) >= 1/x
        return -ceil_pow(1 / x, eps)
    lo, hi = 0, 1
    while pow1p(eps, hi) <= x:
        lo, hi = hi, hi * 2
    # invariant: (1+eps)^lo <= x < (1+eps)^hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pow1p(eps, mid) <= x:
            lo = mid
        else:
            hi = mid
    return lo


def ceil_pow(x: Fraction, eps) -> int:
    """Smallest integer e with (1+eps)^e >= x, for x > 0."""
    if x <= 0:
        raise ValueError("ceil_pow requires x > 0")
    e = floor_pow(x, eps)
    return e if pow1p(eps, e) == x else e + 1


@dataclass(frozen=True)
class RoundedInstance:
    """An instance together with the canonical exponents of its rounded data.

    Rounded speed of machine i is (1+eps)^speed_exponents[i-1] (rounded down
    from the true speed); rounded size of job j on type t is
    (1+eps)^size_exponents[j-1][t-1] (rounded up).  Activation costs, the
    budget and the penalties are carried over unchanged.
    """

    base: Instance
    speed_exponents: tuple[int, ...]
    size_exponents: tuple[tuple[int, ...], ...]

    @property
    def eps(self):
        return self.base.epsilon

    def speed_value(self, i: int) -> Fraction:
        """Rounded speed of machine i (1-based)."""
        return pow1p(self.eps, self.speed_exponents[i - 1])

    def size_value(self, j: int, t: int) -> Fraction:
        """Rounded size of job j on type t (both 1-based)."""
        return pow1p(self.eps, self.size_exponents[j - 1][t - 1])

    def speed_classes(self) -> list[int]:
        """Distinct rounded speed exponents, fastest first."""
        return sorted(set(self.speed_exponents), reverse=True)

    def machines_in_class(self, speed_exp: int) -> list[int]:
        return [
            i
            for i, e in enumerate(self.speed_exponents, start=1)
            if e == speed_exp
        ]

    def size_class_jobs(self, t: int) -> dict[int, list[int]]:
        """Map from size exponent to the (sorted) jobs having it on type t."""
        out: dict[int, list[int]] = {}
        for j in range(1, self.base.n + 1):
            out.setdefault(self.size_exponents[j - 1][t - 1], []).append(j)
        return out

    def to_instance(self) -> Instance:
        """The rounded instance as a plain Instance (for cost evaluation)."""
        machines = tuple(
            MachineSpec(speed=self.speed_value(i), activation=m.activation)
            for i, m in enumerate(self.base.machines, start=1)
        )
        jobs = tuple(
            JobSpec(
                sizes=tuple(self.size_value(j, t) for t in range(1, self.base.tau + 1)),
                penalty=job.penalty,
            )
            for j, job in enumerate(self.base.jobs, start=1)
        )
        return Instance(
            machines=machines,
            jobs=jobs,
            tau=self.base.tau,
            budget=self.base.budget,
            objective=self.base.objective,
            epsilon=self.base.epsilon,
        )


def round_instance(inst: Instance) -> RoundedInstance:
    """Round speeds down and sizes up to powers of 1+eps; linear time."""
    eps = inst.epsilon
    speed_exponents = tuple(floor_pow(m.speed, eps) for m in inst.machines)
    size_exponents = tuple(
        tuple(ceil_pow(p, eps) for p in job.sizes) for job in inst.jobs
    )
    return RoundedInstance(
        base=inst, speed_exponents=speed_exponents, size_exponents=size_exponents
    )


def rounded_to_json(rinst: RoundedInstance) -> dict:
    """Rounded instance in the Instance JSON schema plus an exponents annex."""
    from .model import instance_to_json

    return {
        "instance": instance_to_json(rinst.to_instance()),
        "exponents": {
            "speeds": list(rinst.speed_exponents),
            "sizes": [list(row) for row in rinst.size_exponents],
        },
    }
