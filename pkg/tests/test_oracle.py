import random
from fractions import Fraction

import pytest

from loadbal.model import Infeasible, Solution, TooLarge, evaluate_objective
from loadbal.oracle import (
    brute_force_both,
    brute_force_nice_optimal,
    brute_force_optimal,
    greedy_baseline,
    is_nice,
    make_nice,
)

from conftest import make_instance, random_feasible_solution, random_small_instance


class TestBruteForce:
    def test_t1_makespan_four(self, t1):
        sol, bd = brute_force_optimal(t1)
        assert bd.objective == Fraction(4)
        # lexicographically smallest witness: big job on machine 1
        assert sol.assignment == (1, 2, 2)

    def test_t2_objective_six(self, t2):
        _, bd = brute_force_optimal(t2)
        assert bd.objective == Fraction(6)

    def test_single_forced_job(self):
        inst = make_instance(speeds=[1], jobs=[((1,), None)], psi=1)
        _, bd = brute_force_optimal(inst)
        assert bd.objective == Fraction(1)

    def test_cap_guard(self, t1):
        with pytest.raises(TooLarge):
            brute_force_optimal(t1, cap=5)

    def test_budget_infeasibility(self):
        inst = make_instance(
            speeds=[1], jobs=[((1,), None)], activation=[(2,)], budget=1
        )
        with pytest.raises(Infeasible):
            brute_force_optimal(inst)

    def test_budget_pruning_picks_cheap_types(self):
        inst = make_instance(
            speeds=[1],
            jobs=[((4, 1), None)],
            tau=2,
            activation=[(0, 3)],
            budget=2,
        )
        sol, bd = brute_force_optimal(inst)
        # the cheaper type must be chosen even though the size is larger
        assert sol.machine_types == (1,)
        assert bd.objective == Fraction(4)


class TestNiceOracle:
    def test_equal_when_optimum_is_nice(self, t1):
        _, plain = brute_force_optimal(t1)
        _, nice = brute_force_nice_optimal(t1)
        assert nice.objective == plain.objective

    def test_single_machine_per_type_always_nice(self):
        inst = make_instance(
            speeds=[1, 1],
            jobs=[((2, 3), None), ((3, 2), None)],
            tau=2,
            activation=[(0, 1), (1, 0)],
            budget=0,
        )
        (s1, b1), (s2, b2) = brute_force_both(inst)
        assert b1.objective == b2.objective

    def test_nice_within_lemma_factor(self):
        rng = random.Random(17)
        for _ in range(30):
            inst = random_small_instance(rng, max_n=4, max_m=3)
            try:
                (_, plain), (_, nice) = brute_force_both(inst)
            except Infeasible:
                continue
            bound = inst.epsilon.one_plus ** inst.objective.phi_int
            assert plain.objective <= nice.objective <= bound * plain.objective


class TestNicePredicate:
    def test_agrees_with_definition_exhaustively(self):
        inst = make_instance(
            speeds=[1, "1/2"],
            jobs=[((4,), None), ((1,), None)],
            epsilon_inverse=2,
        )
        eps2 = Fraction(1, 4)
        for a in (1, 2):
            for b in (1, 2):
                sol = Solution((1, 1), (a, b))
                from loadbal.model import evaluate_loads

                loads = evaluate_loads(inst, sol)
                expected = all(
                    loads[0] >= eps2 * loads[i] for i in range(inst.m)
                )
                assert is_nice(inst, sol) == expected


class TestMakeNice:
    def test_already_nice_unchanged(self, t1):
        sol = Solution((1, 1), (1, 2, 2))
        assert is_nice(t1, sol)
        assert make_nice(t1, sol) == sol

    def test_moves_onto_lead_machine(self):
        # lead machine empty, machine 2 loaded: everything moves to machine 1
        inst = make_instance(
            speeds=[1, 1],
            jobs=[((10,), None)],
            epsilon_inverse=2,
        )
        sol = Solution((1, 1), (2,))
        assert not is_nice(inst, sol)
        fixed = make_nice(inst, sol)
        assert fixed.assignment == (1,)
        assert is_nice(inst, fixed)

    def test_property_suite(self):
        rng = random.Random(23)
        done = 0
        while done < 300:
            inst = random_small_instance(rng)
            sol = random_feasible_solution(rng, inst)
            fixed = make_nice(inst, sol)
            assert is_nice(inst, fixed)
            # rejected set unchanged
            assert tuple(a == 0 for a in fixed.assignment) == tuple(
                a == 0 for a in sol.assignment
            )
            # types unchanged
            assert fixed.machine_types == sol.machine_types
            before = evaluate_objective(inst, sol).objective
            after = evaluate_objective(inst, fixed).objective
            bound = inst.epsilon.one_plus ** inst.objective.phi_int
            assert after <= bound * before
            done += 1


class TestGreedy:
    def test_t1_makespan_four(self, t1):
        sol = greedy_baseline(t1)
        assert evaluate_objective(t1, sol).objective == Fraction(4)

    def test_empty_jobs(self):
        inst = make_instance(speeds=[1], jobs=[])
        sol = greedy_baseline(inst)
        assert evaluate_objective(inst, sol).objective == Fraction(0)

    def test_infeasible_budget(self):
        inst = make_instance(
            speeds=[1, 1],
            jobs=[((1,), None)],
            activation=[(1,), (1,)],
            budget=1,
        )
        with pytest.raises(Infeasible):
            greedy_baseline(inst)

    def test_rejects_when_cheaper(self):
        inst = make_instance(
            speeds=[1], jobs=[((4,), 1), ((4,), None)], psi=0, phi=2
        )
        sol = greedy_baseline(inst)
        # scheduling the second size-4 job would add (8^2 - 4^2) = 48 > 1
        assert sol.assignment.count(0) == 1
        assert evaluate_objective(inst, sol).objective == Fraction(17)

    def test_always_feasible_and_at_least_oracle(self):
        rng = random.Random(31)
        for _ in range(40):
            inst = random_small_instance(rng)
            try:
                sol = greedy_baseline(inst)
            except Infeasible:
                continue
            obj = evaluate_objective(inst, sol).objective
            _, bd = brute_force_optimal(inst)
            assert obj >= bd.objective
