"""Machine configurations: approximate per-machine content descriptions.

A configuration fixes a machine type, a rounded speed, a total-size bound
``w`` (a power of 1+eps, or zero for an empty machine), a small-job area
``r`` (a multiple of eps*w) and exact counts of large jobs per size class,
subject to r + sum of large sizes <= (1+eps)^3 * w.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import ExplosionGuard
from .rounding import RoundedInstance, ceil_pow, floor_pow, pow1p

DEFAULT_CONFIG_CAP = 200_000


@dataclass(frozen=True)
class Configuration:
    machine_type: int
    speed_exponent: int
    w_exponent: int | None  # None encodes the zero (empty-machine) configuration
    r_steps: int  # r = r_steps * eps * w
    large_counts: tuple[tuple[int, int], ...]  # ((size exponent, count), ...)

    @property
    def is_zero(self) -> bool:
        return self.w_exponent is None


@dataclass(frozen=True)
class GammaParams:
    """Large-job threshold exponent and the per-(speed, w) count bound."""

    gamma: int
    beta: int


def paper_gamma(tau: int, eps) -> int:
    """The analysis value 20*tau/eps^2 (always >= 10 for eps <= 1/2)."""
    return max(10, 20 * tau * eps.inverse**2)


def lemma5_beta(tau: int, eps, gamma: int) -> int:
    """Upper bound tau * (2/eps)^((2*gamma+1)^2 * ceil(log_{1+eps} 1/eps))."""
    log_term = ceil_pow(Fraction(eps.inverse), eps)
    return tau * (2 * eps.inverse) ** ((2 * gamma + 1) ** 2 * log_term)


def gamma_params(tau: int, eps, gamma: int | None = None) -> GammaParams:
    g = paper_gamma(tau, eps) if gamma is None else gamma
    return GammaParams(gamma=g, beta=lemma5_beta(tau, eps, g))


def config_w(config: Configuration, eps) -> Fraction:
    if config.w_exponent is None:
        return Fraction(0)
    return pow1p(eps, config.w_exponent)


def config_r(config: Configuration, eps) -> Fraction:
    return config.r_steps * eps.value * config_w(config, eps)


def config_speed(config: Configuration, eps) -> Fraction:
    return pow1p(eps, config.speed_exponent)


def config_large_total(config: Configuration, eps) -> Fraction:
    return sum(
        (count * pow1p(eps, z) for z, count in config.large_counts), Fraction(0)
    )


def config_small_area(config: Configuration, eps) -> Fraction:
    """Small-job area the extraction may use: r(C) + 2*eps*w(C)."""
    return config_r(config, eps) + 2 * eps.value * config_w(config, eps)


def check_config(config: Configuration, eps, gamma: int) -> bool:
    """The defining inequality and the large-size window."""
    if config.is_zero:
        return config.r_steps == 0 and not config.large_counts
    w = config_w(config, eps)
    threshold = eps.value**gamma * w
    if any(pow1p(eps, z) < threshold for z, _ in config.large_counts):
        return False
    return (
        config_r(config, eps) + config_large_total(config, eps)
        <= pow1p(eps, config.w_exponent + 3)
    )


def size_classes(rinst: RoundedInstance, guess, t: int) -> list[int]:
    """Possible size exponents for type t: existing rounded job sizes not
    exceeding s_mu(t) * min(L_t / eps^3, O)."""
    mu = guess.mu[t - 1]
    if mu is None:
        raise ValueError(f"type {t} has no guessed minimum machine")
    eps = rinst.eps
    o_value = pow1p(eps, guess.o_exponent)
    load = guess.load_value(t, eps)
    cap = rinst.speed_value(mu) * min(load / eps.value**3, o_value)
    return sorted(
        z for z in rinst.size_class_jobs(t) if pow1p(eps, z) <= cap
    )


def enumerate_type_speed(
    rinst: RoundedInstance,
    t: int,
    s_exp: int,
    o_exponent: int,
    gamma: int,
    allowed: frozenset[int],
    cap: int = DEFAULT_CONFIG_CAP,
) -> list[Configuration]:
    """Configurations for one (type, speed) pair: the zero configuration,
    plus every w in the power ladder [eps^gamma * (smallest rounded size for
    t), (1+eps)^3 * s * O] with every large-count vector over the allowed
    size classes in the window (counts bounded by the capacity inequality
    and by the number of existing jobs of the class) and every feasible
    multiple of eps*w for r."""
    eps = rinst.eps
    out = [
        Configuration(
            machine_type=t,
            speed_exponent=s_exp,
            w_exponent=None,
            r_steps=0,
            large_counts=(),
        )
    ]
    class_jobs = rinst.size_class_jobs(t)
    if not class_jobs:
        return out
    o_value = pow1p(eps, o_exponent)
    eps_gamma = eps.value**gamma
    min_size = pow1p(eps, min(class_jobs))
    lo = ceil_pow(eps_gamma * min_size, eps)
    hi = floor_pow(pow1p(eps, s_exp + 3) * o_value, eps)
    for w_exp in range(lo, hi + 1):
        w = pow1p(eps, w_exp)
        capacity = pow1p(eps, w_exp + 3)
        threshold = eps_gamma * w
        step = eps.value * w
        large = sorted(
            (z for z in allowed if threshold <= pow1p(eps, z) <= capacity),
            reverse=True,
        )
        counts: list[tuple[int, int]] = []

        def emit(used: Fraction):
            r_top = int((capacity - used) // step)
            chosen = tuple(sorted(counts))
            for r_steps in range(r_top + 1):
                out.append(
                    Configuration(
                        machine_type=t,
                        speed_exponent=s_exp,
                        w_exponent=w_exp,
                        r_steps=r_steps,
                        large_counts=chosen,
                    )
                )
            if len(out) > cap:
                raise ExplosionGuard(
                    f"more than {cap} configurations; lower --gamma "
                    "(practical mode) or raise the cap"
                )

        def rec(idx: int, used: Fraction):
            if idx == len(large):
                emit(used)
                return
            z = large[idx]
            size = pow1p(eps, z)
            top = min(len(class_jobs[z]), int((capacity - used) // size))
            for c in range(top + 1):
                if c:
                    counts.append((z, c))
                rec(idx + 1, used + c * size)
                if c:
                    counts.pop()

        rec(0, Fraction(0))
    return out


def enumerate_configurations(
    rinst: RoundedInstance,
    guess,
    gamma: int,
    cap: int = DEFAULT_CONFIG_CAP,
    restrict_to_caps: bool = False,
    cache: dict | None = None,
) -> list[Configuration]:
    """All configurations for the guess's active types.

    ``restrict_to_caps`` intersects the large classes with the possible set
    ``size_classes(t)`` (columns outside it are forced to zero by the
    counting constraints, so the solver never needs them).  ``cache`` may
    carry results across guesses, keyed by (t, speed, O, allowed classes).

    Raises ExplosionGuard when the count for one (type, speed) pair would
    exceed ``cap``.
    """
    out: list[Configuration] = []
    if guess.o_exponent is None:
        return out
    for t in range(1, rinst.base.tau + 1):
        if guess.mu[t - 1] is None:
            continue
        if restrict_to_caps:
            allowed = frozenset(size_classes(rinst, guess, t))
        else:
            allowed = frozenset(rinst.size_class_jobs(t))
        for s_exp in rinst.speed_classes():
            key = (t, s_exp, guess.o_exponent, allowed, gamma)
            if cache is not None and key in cache:
                out.extend(cache[key])
                continue
            block = enumerate_type_speed(
                rinst, t, s_exp, guess.o_exponent, gamma, allowed, cap=cap
            )
            if cache is not None:
                cache[key] = block
            out.extend(block)
    return out


def aggregate_configurations(
    rinst: RoundedInstance,
    t: int,
    s_exp: int,
    o_exponent: int,
    gamma: int,
    allowed: frozenset[int],
) -> list[Configuration]:
    """One synthetic configuration per w carrying the componentwise maxima
    (every in-window class at its largest feasible count, maximal r).

    These may violate the joint capacity inequality on purpose: together
    with relaxing the large-count equality to <=, a model built over them
    is a relaxation of the exact configuration model (any exact solution
    maps onto it by summation), so its LP value is a valid pruning bound.
    """
    eps = rinst.eps
    out = [
        Configuration(
            machine_type=t,
            speed_exponent=s_exp,
            w_exponent=None,
            r_steps=0,
            large_counts=(),
        )
    ]
    class_jobs = rinst.size_class_jobs(t)
    if not class_jobs:
        return out
    o_value = pow1p(eps, o_exponent)
    eps_gamma = eps.value**gamma
    min_size = pow1p(eps, min(class_jobs))
    lo = ceil_pow(eps_gamma * min_size, eps)
    hi = floor_pow(pow1p(eps, s_exp + 3) * o_value, eps)
    for w_exp in range(lo, hi + 1):
        w = pow1p(eps, w_exp)
        capacity = pow1p(eps, w_exp + 3)
        threshold = eps_gamma * w
        counts = []
        for z in sorted(allowed):
            size = pow1p(eps, z)
            if threshold <= size <= capacity:
                counts.append((z, min(len(class_jobs[z]), int(capacity // size))))
        out.append(
            Configuration(
                machine_type=t,
                speed_exponent=s_exp,
                w_exponent=w_exp,
                r_steps=int(capacity // (eps.value * w)),
                large_counts=tuple(counts),
            )
        )
    return out


def count_by_speed_w(configs: list[Configuration]) -> dict[tuple[int, int | None], int]:
    """Configuration counts per (speed exponent, w exponent) pair."""
    out: dict[tuple[int, int | None], int] = {}
    for c in configs:
        key = (c.speed_exponent, c.w_exponent)
        out[key] = out.get(key, 0) + 1
    return out
