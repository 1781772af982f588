"""Enumeration of the guessed outline of a near-optimal solution.

A guess fixes an approximate makespan O (a power of 1+eps, or zero for the
all-rejected case), and per machine type the minimum activated machine
index mu(t) (or ABSENT when the type is unused) together with machine
mu(t)'s approximate load L_t, an integer multiple of eps*O/tau.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .model import PreconditionViolated
from .rounding import RoundedInstance, ceil_pow, pow1p


@dataclass(frozen=True)
class Guess:
    """o_exponent None encodes O = 0 (the all-rejected candidate); mu[t-1]
    None encodes ABSENT (type t unused), in which case load_steps[t-1] is
    None as well, and otherwise L_t = load_steps[t-1] * eps * O / tau."""

    o_exponent: int | None
    mu: tuple[int | None, ...]
    load_steps: tuple[int | None, ...]

    def o_value(self, eps) -> Fraction:
        if self.o_exponent is None:
            return Fraction(0)
        return pow1p(eps, self.o_exponent)

    def load_value(self, t: int, eps) -> Fraction:
        steps = self.load_steps[t - 1]
        if steps is None:
            raise ValueError(f"type {t} is absent from the guess")
        return steps * eps.value * self.o_value(eps) / len(self.mu)

    def active_types(self) -> list[int]:
        return [t for t, mu in enumerate(self.mu, start=1) if mu is not None]


def forced_types(rinst: RoundedInstance) -> list[int]:
    """Per-machine pre-specified type: the unique zero-cost activation.

    Only meaningful for the pre-specified-types machine model (zero budget,
    exactly one free type per machine); raises otherwise.
    """
    base = rinst.base
    if base.budget != 0:
        raise PreconditionViolated(
            "pre-specified-types mode requires a zero activation budget"
        )
    out = []
    for i, mach in enumerate(base.machines, start=1):
        zeros = [t for t in range(1, base.tau + 1) if mach.activation[t - 1] == 0]
        if len(zeros) != 1:
            raise PreconditionViolated(
                f"machine {i} must have exactly one zero-cost type "
                f"(found {len(zeros)})"
            )
        out.append(zeros[0])
    return out


def makespan_exponents(rinst: RoundedInstance) -> list[int]:
    """Deduplicated O candidates: p'_j(t)/s'_i times (1+eps)^k for
    k = 0..ceil(log_{1+eps} n), as exponents, ascending."""
    base = rinst.base
    n = base.n
    if n == 0:
        return []
    k_top = ceil_pow(Fraction(n), rinst.eps)
    exps = set()
    for row in rinst.size_exponents:
        for zeta in row:
            for e in rinst.speed_exponents:
                exps.add(zeta - e)
    return sorted({e + k for e in exps for k in range(k_top + 1)})


def enumerate_guesses(
    rinst: RoundedInstance, pre_specified: bool = False
) -> Iterator[Guess]:
    """Stream every guess candidate, deduplicated.

    Ordered deterministically: the all-rejected guess first (when no job is
    mandatory), then ascending O; per type the load multiples run from the
    largest down and ABSENT comes last.  Tuples where the mu values collide,
    or where some type is used but none has mu(t) = 1, cannot describe any
    solution (machine 1 always carries a type) and are not emitted.
    """
    base = rinst.base
    tau = base.tau
    k_top = tau * rinst.eps.inverse  # largest multiple with L_t <= O

    if not any(job.is_mandatory for job in base.jobs):
        yield Guess(
            o_exponent=None, mu=(None,) * tau, load_steps=(None,) * tau
        )

    fixed_mu: list[int | None] | None = None
    if pre_specified:
        forced = forced_types(rinst)
        fixed_mu = [None] * tau
        for i, t in enumerate(forced, start=1):
            if fixed_mu[t - 1] is None:
                fixed_mu[t - 1] = i

    options: list[list[tuple[int | None, int | None]]] = []
    for t in range(1, tau + 1):
        opts: list[tuple[int | None, int | None]] = []
        if fixed_mu is not None:
            if fixed_mu[t - 1] is not None:
                opts = [(fixed_mu[t - 1], k) for k in range(k_top, -1, -1)]
            opts.append((None, None))
        else:
            for i in range(1, base.m + 1):
                opts.extend((i, k) for k in range(k_top, -1, -1))
            opts.append((None, None))
        options.append(opts)

    for o_exp in makespan_exponents(rinst):
        for combo in itertools.product(*options):
            mus = tuple(mu for mu, _ in combo)
            used = [mu for mu in mus if mu is not None]
            if len(set(used)) != len(used):
                continue
            if used and min(used) != 1:
                continue
            yield Guess(
                o_exponent=o_exp,
                mu=mus,
                load_steps=tuple(k for _, k in combo),
            )


def guess_space_bound(
    n: int, m: int, tau: int, eps, pre_specified: bool = False
) -> int:
    """Concrete upper bound on the stream length: n*m*tau*(ceil(log n)+1)
    O candidates times ((m+1)(tau/eps+2))^tau outline combinations, plus one
    for the all-rejected guess.  Pre-specified types drop the m+1 factor."""
    log_term = ceil_pow(Fraction(n), eps) if n >= 1 else 0
    o_count = n * m * tau * (log_term + 1)
    per_type = tau * eps.inverse + 2
    if not pre_specified:
        per_type *= m + 1
    return o_count * per_type**tau + 1
