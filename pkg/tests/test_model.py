import json
import random
from fractions import Fraction

import pytest

from loadbal.model import (
    MANDATORY,
    BudgetViolation,
    Epsilon,
    MandatoryRejected,
    PreconditionViolated,
    Solution,
    check_F_sandwich,
    evaluate_loads,
    evaluate_objective,
    instance_from_json,
    instance_to_json,
    normalize_speeds,
    objective_f,
    parse_rational,
    solution_from_json,
    solution_to_json,
    validate_instance,
)

from conftest import make_instance


class TestValidate:
    def test_minimal_instance_ok(self):
        inst = make_instance(speeds=[1], jobs=[((1,), None)])
        assert validate_instance(inst) == []

    def test_zero_speed_rejected(self):
        inst = make_instance(speeds=[0], jobs=[((1,), None)])
        assert any("speed must be positive" in v for v in validate_instance(inst))

    def test_increasing_speeds_rejected(self):
        inst = make_instance(speeds=[1, 2], jobs=[((1,), None)])
        assert any("not non-increasing" in v for v in validate_instance(inst))

    def test_tau_cap(self):
        inst = make_instance(
            speeds=[1], jobs=[((1,) * 5, None)], tau=5
        )
        assert any("enumeration cap" in v for v in validate_instance(inst))
        assert not any(
            "enumeration cap" in v for v in validate_instance(inst, max_tau=5)
        )

    def test_fractional_phi_flagged(self):
        inst = make_instance(speeds=[1], jobs=[((1,), None)], phi=Fraction(3, 2))
        assert any("integer" in v for v in validate_instance(inst))

    def test_epsilon_requires_integer_inverse(self):
        with pytest.raises(ValueError):
            Epsilon(1)


class TestLoads:
    def test_split_four_two_two(self, t1):
        sol = Solution(machine_types=(1, 1), assignment=(1, 2, 2))
        assert evaluate_loads(t1, sol) == (Fraction(4), Fraction(4))

    def test_speed_divides(self):
        inst = make_instance(speeds=[1, "1/2"], jobs=[((3,), None)])
        sol = Solution(machine_types=(1, 1), assignment=(2,))
        # normalized speeds: job of size 3 on the half-speed machine
        assert evaluate_loads(inst, sol)[1] == Fraction(6)

    def test_all_rejected_zero_loads(self, t2):
        sol = Solution(machine_types=(1,), assignment=(0, 0))
        assert evaluate_loads(t2, sol) == (Fraction(0),)

    def test_out_of_range_assignment(self, t1):
        sol = Solution(machine_types=(1, 1), assignment=(3, 0, 0))
        with pytest.raises(IndexError):
            evaluate_loads(t1, sol)


class TestObjective:
    def test_half_psi_square(self):
        inst = make_instance(
            speeds=[1, 1],
            jobs=[((2,), None), ((2,), None)],
            psi=Fraction(1, 2),
            phi=2,
        )
        sol = Solution(machine_types=(1, 1), assignment=(1, 2))
        bd = evaluate_objective(inst, sol)
        assert bd.f_value == Fraction(5)  # 1/2 * 2 + 1/2 * (4 + 4)
        assert bd.objective == Fraction(5)

    def test_rejection_added(self):
        inst = make_instance(
            speeds=[1], jobs=[((1,), None), ((5,), 2)], psi=0, phi=2
        )
        sol = Solution(machine_types=(1,), assignment=(1, 0))
        bd = evaluate_objective(inst, sol)
        assert bd.objective == Fraction(3)  # 1^2 + penalty 2

    def test_t2_optimum_is_six(self, t2):
        # independent check: enumerate all four accept/reject patterns
        best = None
        for a in (0, 1):
            for b in (0, 1):
                sol = Solution(machine_types=(1,), assignment=(a, b))
                obj = evaluate_objective(t2, sol).objective
                best = obj if best is None else min(best, obj)
        assert best == Fraction(6)
        chosen = Solution(machine_types=(1,), assignment=(0, 1))
        assert evaluate_objective(t2, chosen).objective == Fraction(6)

    def test_budget_violation(self):
        inst = make_instance(
            speeds=[1],
            jobs=[((1,), None)],
            activation=[(3,)],
            budget=2,
        )
        with pytest.raises(BudgetViolation):
            evaluate_objective(inst, Solution((1,), (1,)))

    def test_mandatory_rejected(self, t1):
        with pytest.raises(MandatoryRejected):
            evaluate_objective(t1, Solution((1, 1), (0, 1, 1)))

    def test_order_independence(self):
        rng = random.Random(7)
        inst = make_instance(
            speeds=[1, "1/2"],
            jobs=[((3,), 4), ((2,), None), ((1,), 1)],
            psi=Fraction(1, 2),
            phi=3,
        )
        sol = Solution(machine_types=(1, 1), assignment=(2, 1, 0))
        reference = evaluate_objective(inst, sol).objective
        for _ in range(5):
            assert evaluate_objective(inst, sol).objective == reference

    def test_monotone_in_added_job(self):
        # adding a job to any machine never decreases F
        rng = random.Random(3)
        from conftest import random_feasible_solution, random_small_instance

        for _ in range(60):
            inst = random_small_instance(rng)
            sol = random_feasible_solution(rng, inst)
            loads = evaluate_loads(inst, sol)
            f0 = objective_f(loads, inst.objective)
            j = rng.randrange(inst.n)
            if sol.assignment[j] != 0:
                continue
            i = rng.randint(1, inst.m)
            new_assignment = list(sol.assignment)
            new_assignment[j] = i
            sol2 = Solution(sol.machine_types, tuple(new_assignment))
            f1 = objective_f(evaluate_loads(inst, sol2), inst.objective)
            assert f1 >= f0


class TestSandwich:
    def test_identity(self):
        eps = Epsilon(2)
        from loadbal.model import ObjectiveParams

        params = ObjectiveParams(Fraction(1, 2), Fraction(2))
        lam = (Fraction(1), Fraction(3, 2))
        assert check_F_sandwich(lam, lam, 1, eps, params)

    def test_boundary(self):
        eps = Epsilon(2)
        from loadbal.model import ObjectiveParams

        params = ObjectiveParams(Fraction(1), Fraction(2))
        lam = (Fraction(1), Fraction(1))
        hi = tuple(x * eps.one_plus for x in lam)
        assert check_F_sandwich(lam, hi, 1, eps, params)

    def test_precondition_enforced(self):
        eps = Epsilon(2)
        from loadbal.model import ObjectiveParams

        params = ObjectiveParams(Fraction(1), Fraction(2))
        with pytest.raises(PreconditionViolated):
            check_F_sandwich((Fraction(1),), (Fraction(3),), 1, eps, params)

    def test_random_sandwich_always_holds(self):
        from loadbal.model import ObjectiveParams

        rng = random.Random(11)
        for _ in range(1000):
            eps = Epsilon(rng.choice((2, 3, 4, 8)))
            rho = rng.randint(1, 4)
            params = ObjectiveParams(
                psi=Fraction(rng.randint(0, 4), 4),
                phi=Fraction(rng.choice((2, 3, 4))),
            )
            m = rng.randint(1, 5)
            lam = [Fraction(rng.randint(0, 40), rng.randint(1, 5)) for _ in range(m)]
            factor = eps.one_plus**rho
            hi = []
            for x in lam:
                # random point inside [x, (1+eps)^rho x]
                tpick = Fraction(rng.randint(0, 16), 16)
                hi.append(x + (factor * x - x) * tpick)
            assert check_F_sandwich(lam, hi, rho, eps, params)


class TestJson:
    def test_round_trip(self, t2):
        data = instance_to_json(t2)
        again = instance_from_json(json.loads(json.dumps(data)))
        assert again == t2

    def test_rationals_as_strings(self, t2):
        data = instance_to_json(t2)
        assert data["jobs"][0]["penalty"] == "5"
        assert isinstance(data["budget"], str)

    def test_mandatory_marker(self, t1):
        data = instance_to_json(t1)
        assert data["jobs"][0]["penalty"] == "mandatory"
        assert instance_from_json(data).jobs[0].penalty is MANDATORY

    def test_solution_round_trip(self):
        sol = Solution(machine_types=(1, 2), assignment=(0, 2, 1))
        data = solution_to_json(sol, Fraction(7, 3))
        sol2, claimed = solution_from_json(data)
        assert sol2 == sol and claimed == Fraction(7, 3)

    def test_malformed_raises_value_error(self):
        with pytest.raises(ValueError):
            instance_from_json({"tau": 1})

    def test_parse_rational(self):
        assert parse_rational("3/4") == Fraction(3, 4)
        assert parse_rational(5) == Fraction(5)
        with pytest.raises(ValueError):
            parse_rational(None)

    def test_normalization_on_load(self):
        inst = make_instance(speeds=[2, 1], jobs=[((1,), None)])
        data = instance_to_json(inst)
        loaded = instance_from_json(data)
        assert loaded.machines[0].speed == 1
        assert loaded.machines[1].speed == Fraction(1, 2)
        assert normalize_speeds(loaded) == loaded
