import random
from fractions import Fraction

import pytest

from loadbal.configs import enumerate_configurations
from loadbal.guessing import Guess, enumerate_guesses
from loadbal.milp import (
    EQ,
    GE,
    LE,
    MilpModel,
    build_milp,
    dump_lp_text,
    integer_census,
    job_classes_of,
    solve_lp,
    solve_milp,
)
from loadbal.model import NodeLimit, normalize_speeds
from loadbal.rounding import pow1p, round_instance

from conftest import make_instance, random_small_instance


def model_for(inst, guess=None, gamma=2, restrict=True):
    inst = normalize_speeds(inst)
    rinst = round_instance(inst)
    if guess is None:
        for g in enumerate_guesses(rinst):
            if g.o_exponent is not None and g.active_types():
                guess = g
                break
    configs = enumerate_configurations(
        rinst, guess, gamma, restrict_to_caps=restrict
    )
    return rinst, build_milp(rinst, guess, configs, gamma)


class TestBuild:
    def test_smallest_model_solvable(self):
        inst = make_instance(speeds=[1], jobs=[((2,), None)])
        rinst = round_instance(inst)
        z = rinst.size_exponents[0][0]
        guess = Guess(z, (1,), (2,))
        configs = enumerate_configurations(rinst, guess, 2, restrict_to_caps=True)
        model = build_milp(rinst, guess, configs, 2)
        assert model.pins[("z", 1, 1)] == 1
        res = solve_milp(model)
        assert res.status == "optimal"
        # psi=1: value is the guessed makespan
        assert res.objective == pow1p(inst.epsilon, z)

    def test_mandatory_job_has_no_rejection_column(self):
        inst = make_instance(
            speeds=[1], jobs=[((2,), None), ((2,), 3)], psi=0
        )
        _, model = model_for(inst)
        classes = model.job_classes
        mandatory = [cid for cid, c in enumerate(classes) if c.penalty is None]
        rejectable = [cid for cid, c in enumerate(classes) if c.penalty is not None]
        for cid in mandatory:
            assert ("y", cid, 0) not in model.keys
        for cid in rejectable:
            assert ("y", cid, 0) in model.keys

    def test_job_aggregation(self):
        inst = make_instance(
            speeds=[1],
            jobs=[((2,), 3), ((2,), 3), ((2,), None), ((3,), 3)],
        )
        rinst = round_instance(inst)
        classes = job_classes_of(rinst)
        sizes = sorted((c.exponents, c.penalty is None, len(c.jobs)) for c in classes)
        assert len(classes) == 3
        assert {len(c.jobs) for c in classes} == {1, 2}

    def test_infeasible_when_all_types_absent(self):
        inst = make_instance(speeds=[1], jobs=[((2,), 1)])
        rinst = round_instance(inst)
        guess = Guess(0, (None,), (None,))
        model = build_milp(rinst, guess, [], 2)
        assert solve_lp(model).status == "infeasible"

    def test_budget_pin_infeasibility(self):
        # guess pins z_{mu(2),2} = 1 but the budget forbids type 2
        inst = make_instance(
            speeds=[1],
            jobs=[((2, 2), None)],
            tau=2,
            activation=[(0, 5)],
            budget=1,
        )
        rinst = round_instance(inst)
        z = rinst.size_exponents[0][1]
        guess = Guess(z, (None, 1), (None, 4))
        configs = enumerate_configurations(rinst, guess, 2, restrict_to_caps=True)
        model = build_milp(rinst, guess, configs, 2)
        assert solve_lp(model).status == "infeasible"

    def test_lp_dump_contains_sections(self):
        inst = make_instance(speeds=[1], jobs=[((2,), None)])
        _, model = model_for(inst)
        text = dump_lp_text(model)
        for token in ("Minimize", "Subject To", "Bounds", "Generals", "End"):
            assert token in text


class TestCensus:
    def test_independent_of_n_and_m(self):
        # growing n within existing size classes and m within existing speed
        # classes must not change the integrality census
        def build(n_copies, m_copies):
            jobs = [((2,), None), ((1,), 2)] * n_copies
            speeds = [1] * m_copies + ["1/2"] * m_copies
            inst = make_instance(speeds=speeds, jobs=jobs)
            rinst = round_instance(inst)
            guess = Guess(
                rinst.size_exponents[0][0] + 2, (1,), (2,)
            )
            configs = enumerate_configurations(
                rinst, guess, 2, restrict_to_caps=True
            )
            return integer_census(build_milp(rinst, guess, configs, 2))

        small = build(1, 1)
        more_jobs = build(4, 1)
        more_machines = build(1, 3)
        assert small == more_jobs == more_machines
        assert sum(small.values()) > 0

    def test_families_marked_per_rules(self):
        inst = make_instance(
            speeds=[1, "1/2"], jobs=[((2,), None), (("1/4",), 1)]
        )
        rinst, model = model_for(inst)
        eps = rinst.eps
        gamma = model.gamma
        guess = model.guess
        mu_speed = rinst.speed_value(guess.mu[0])
        load = guess.load_value(1, eps)
        for k in model.keys:
            if k[0] == "m":
                s_val = pow1p(eps, k[1])
                expected = mu_speed >= s_val >= mu_speed * eps.value**gamma
                assert (k in model.integral) == expected
            elif k[0] in ("n", "np"):
                expected = pow1p(eps, k[1]) >= mu_speed * load * eps.value**gamma
                assert (k in model.integral) == expected


class TestSolver:
    def test_lp_no_branching_when_integral(self):
        inst = make_instance(speeds=[1], jobs=[((2,), None)])
        _, model = model_for(inst)
        lp = solve_lp(model)
        msol = solve_milp(model)
        if all(lp.values[k].denominator == 1 for k in model.integral):
            assert msol.objective == lp.objective

    def test_lp_below_milp_on_random_models(self):
        rng = random.Random(37)
        done = 0
        while done < 25:
            inst = random_small_instance(rng, max_n=4, max_m=2, max_tau=2)
            rinst = round_instance(normalize_speeds(inst))
            guess = None
            for g in enumerate_guesses(rinst):
                if g.o_exponent is not None and g.active_types():
                    guess = g
                    break
            if guess is None:
                continue
            configs = enumerate_configurations(
                rinst, guess, 2, restrict_to_caps=True
            )
            model = build_milp(rinst, guess, configs, 2)
            lp = solve_lp(model)
            msol = solve_milp(model)
            if lp.status == "infeasible":
                assert msol.status == "infeasible"
            elif msol.status == "optimal":
                assert lp.objective <= msol.objective
            done += 1

    def test_node_limit_surfaces(self):
        # a model with several fractional marks and a tiny node budget
        rng = random.Random(5)
        for _ in range(50):
            inst = random_small_instance(rng, max_n=5, max_m=3, max_tau=2)
            rinst = round_instance(normalize_speeds(inst))
            for g in enumerate_guesses(rinst):
                if g.o_exponent is None or not g.active_types():
                    continue
                configs = enumerate_configurations(
                    rinst, g, 2, restrict_to_caps=True
                )
                model = build_milp(rinst, g, configs, 2)
                lp = solve_lp(model)
                if lp.status != "optimal":
                    continue
                if any(lp.values[k].denominator != 1 for k in model.integral):
                    with pytest.raises(NodeLimit):
                        solve_milp(model, node_limit=1)
                    return
        pytest.skip("no fractional root found in the sample")

    def test_cutoff_status(self):
        inst = make_instance(speeds=[1], jobs=[((2,), None)])
        _, model = model_for(inst)
        value = solve_milp(model).objective
        assert solve_milp(model, cutoff=value).status == "cutoff"
        assert solve_milp(model, cutoff=value + 1).objective == value


def random_toy_milp(rng):
    """Small bounded MILP with explicit box rows for exhaustive checks."""
    n = rng.randint(2, 4)
    n_int = rng.randint(1, min(3, n))
    keys = [("v", j) for j in range(n)]
    boxes = [rng.randint(1, 2) for _ in range(n)]
    rows = []
    for j, key in enumerate(keys):
        rows.append(({key: Fraction(1)}, LE, Fraction(boxes[j])))
    for _ in range(rng.randint(1, 3)):
        coeffs = {
            keys[j]: Fraction(rng.randint(-3, 4))
            for j in rng.sample(range(n), rng.randint(1, n))
        }
        rows.append(
            (coeffs, rng.choice((LE, GE)), Fraction(rng.randint(-2, 4)))
        )
    objective = {keys[j]: Fraction(rng.randint(-3, 5)) for j in range(n)}
    # keep the objective bounded below over the box: box rows cap everything
    model = MilpModel(
        keys=keys,
        objective=objective,
        integral=keys[:n_int],
        rows=rows,
        obj_constant=Fraction(0),
        pins={},
        guess=None,
        gamma=2,
        configs=[],
        job_classes=[],
        zeta={},
        band={},
    )
    return model, boxes, n_int


class TestAgainstEnumeration:
    def test_matches_exhaustive_enumeration(self):
        rng = random.Random(99)
        matched = 0
        for _ in range(100):
            model, boxes, n_int = random_toy_milp(rng)
            res = solve_milp(model)
            # enumerate integer assignments of the marked variables with LP
            # completion over the rest
            best = None
            int_keys = model.integral

            def assignments(idx, cur):
                if idx == len(int_keys):
                    yield dict(cur)
                    return
                key = int_keys[idx]
                box = boxes[key[1]]
                for v in range(box + 1):
                    cur[key] = Fraction(v)
                    yield from assignments(idx + 1, cur)
                cur.pop(key, None)

            for fixing in assignments(0, {}):
                extra = [(k, EQ, v) for k, v in fixing.items()]
                lp = solve_lp(model, extra_rows=extra)
                if lp.status == "optimal":
                    if best is None or lp.objective < best:
                        best = lp.objective
            if best is None:
                assert res.status == "infeasible"
            else:
                assert res.status == "optimal"
                assert res.objective == best
                matched += 1
        assert matched >= 60
