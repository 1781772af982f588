import random
from fractions import Fraction

import pytest

from loadbal.guessing import (
    Guess,
    enumerate_guesses,
    forced_types,
    guess_space_bound,
    makespan_exponents,
)
from loadbal.model import PreconditionViolated, evaluate_loads
from loadbal.oracle import brute_force_nice_optimal
from loadbal.rounding import pow1p, round_instance

from conftest import make_instance, random_small_instance


class TestStream:
    def test_smallest_case(self):
        inst = make_instance(speeds=[1], jobs=[((2,), None)])
        rinst = round_instance(inst)
        # n = 1: the log term vanishes, one O candidate p'(1)/s'(1)
        assert makespan_exponents(rinst) == [rinst.size_exponents[0][0]]
        guesses = list(enumerate_guesses(rinst))
        mus = {g.mu for g in guesses}
        assert mus == {(1,), (None,)}
        # mandatory job: no all-rejected guess
        assert all(g.o_exponent is not None for g in guesses)

    def test_all_rejected_guess_present(self):
        inst = make_instance(speeds=[1], jobs=[((2,), 1)])
        rinst = round_instance(inst)
        guesses = list(enumerate_guesses(rinst))
        assert guesses[0] == Guess(None, (None,), (None,))
        assert sum(1 for g in guesses if g.o_exponent is None) == 1

    def test_no_duplicates(self):
        rng = random.Random(3)
        for _ in range(20):
            inst = random_small_instance(rng)
            rinst = round_instance(inst)
            guesses = list(enumerate_guesses(rinst))
            assert len(set(guesses)) == len(guesses)

    def test_load_steps_within_range(self):
        rng = random.Random(5)
        inst = random_small_instance(rng, max_tau=2)
        rinst = round_instance(inst)
        k_top = inst.tau * inst.epsilon.inverse
        for g in enumerate_guesses(rinst):
            for mu, steps in zip(g.mu, g.load_steps):
                assert (mu is None) == (steps is None)
                if steps is not None:
                    assert 0 <= steps <= k_top
                    # O >= max L_t by construction
                    assert g.load_value(
                        g.mu.index(mu) + 1, inst.epsilon
                    ) <= g.o_value(inst.epsilon)

    def test_mu_tuples_valid(self):
        rng = random.Random(7)
        inst = random_small_instance(rng, max_m=3, max_tau=2)
        rinst = round_instance(inst)
        for g in enumerate_guesses(rinst):
            used = [mu for mu in g.mu if mu is not None]
            assert len(set(used)) == len(used)
            if used:
                assert min(used) == 1


class TestBound:
    def test_stream_never_exceeds_bound(self):
        rng = random.Random(11)
        for _ in range(100):
            inst = random_small_instance(rng, max_n=6, max_m=4, max_tau=2)
            rinst = round_instance(inst)
            count = sum(1 for _ in enumerate_guesses(rinst))
            bound = guess_space_bound(
                inst.n, inst.m, inst.tau, inst.epsilon
            )
            assert count <= bound

    def test_smallest_parameters(self):
        inst = make_instance(speeds=[1], jobs=[((1,), 1)])
        rinst = round_instance(inst)
        count = sum(1 for _ in enumerate_guesses(rinst))
        assert count <= guess_space_bound(1, 1, 1, inst.epsilon)

    def test_pre_specified_bound_drops_machine_factor(self):
        from loadbal.model import Epsilon

        eps = Epsilon(2)
        full = guess_space_bound(6, 5, 2, eps)
        fixed = guess_space_bound(6, 5, 2, eps, pre_specified=True)
        # the (m+1)^tau factor disappears when types are pre-specified
        assert full - 1 == (fixed - 1) * (5 + 1) ** 2


class TestPreSpecified:
    def _fixed_type_instance(self):
        return make_instance(
            speeds=[1, 1, "1/2"],
            jobs=[((2, 3), None), ((1, 1), 2)],
            tau=2,
            activation=[(0, 1), (1, 0), (1, 0)],
            budget=0,
        )

    def test_forced_types_computed(self):
        inst = self._fixed_type_instance()
        rinst = round_instance(inst)
        assert forced_types(rinst) == [1, 2, 2]

    def test_stream_fixes_mu(self):
        inst = self._fixed_type_instance()
        rinst = round_instance(inst)
        for g in enumerate_guesses(rinst, pre_specified=True):
            if g.o_exponent is None:
                continue
            assert g.mu[0] in (1, None)
            assert g.mu[1] in (2, None)

    def test_rejects_nonzero_budget(self):
        inst = make_instance(
            speeds=[1],
            jobs=[((1,), None)],
            activation=[(0,)],
            budget=1,
        )
        rinst = round_instance(inst)
        with pytest.raises(PreconditionViolated):
            forced_types(rinst)

    def test_rejects_ambiguous_zero_costs(self):
        inst = make_instance(
            speeds=[1],
            jobs=[((1, 1), None)],
            tau=2,
            activation=[(0, 0)],
            budget=0,
        )
        rinst = round_instance(inst)
        with pytest.raises(PreconditionViolated):
            forced_types(rinst)


class TestCompleteness:
    def test_nice_optimum_has_consistent_guess(self):
        rng = random.Random(13)
        done = 0
        while done < 25:
            inst = random_small_instance(rng, max_n=4, max_m=3, max_tau=2)
            from loadbal.model import Infeasible, normalize_speeds

            inst = normalize_speeds(inst)
            rinst = round_instance(inst)
            rounded = rinst.to_instance()
            try:
                sol, bd = brute_force_nice_optimal(rounded)
            except Infeasible:
                continue
            done += 1
            eps = inst.epsilon
            loads = evaluate_loads(rounded, sol)
            makespan = max(loads) if loads else Fraction(0)
            if makespan == 0:
                if not any(j.is_mandatory for j in inst.jobs):
                    assert any(
                        g.o_exponent is None for g in enumerate_guesses(rinst)
                    )
                continue
            mu_true = {}
            for i, t in enumerate(sol.machine_types, start=1):
                mu_true.setdefault(t, i)
            found = False
            for g in enumerate_guesses(rinst):
                if g.o_exponent is None:
                    continue
                o_val = g.o_value(eps)
                if not (o_val / eps.one_plus < makespan <= o_val):
                    continue
                ok = True
                for t in range(1, inst.tau + 1):
                    if t in mu_true:
                        if g.mu[t - 1] != mu_true[t]:
                            ok = False
                            break
                        load = loads[mu_true[t] - 1]
                        l_val = g.load_value(t, eps)
                        if not (l_val - eps.value * o_val / inst.tau < load <= l_val):
                            ok = False
                            break
                    elif g.mu[t - 1] is not None:
                        ok = False
                        break
                if ok:
                    found = True
                    break
            assert found
        assert done == 25
