import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbacktrack.csp import (KSatInstance, PartialAssignment, RngSpec, Verdict, brute_force_solutions,
                            evaluate, expected_solution_count, instance_from_clauses, naive_heuristic,
                            parse_dimacs, random_ksat)
from qbacktrack.errors import ContractViolation, InputError


def pa(n, *pairs):
    return PartialAssignment(n, tuple(pairs))


class TestEvaluate:
    def test_falsified_clause(self):
        inst = instance_from_clauses(3, [(1, 2, 3)])
        assert evaluate(inst, pa(3, (1, 0), (2, 0), (3, 0))) is Verdict.FALSE

    def test_satisfied_literal_eager(self):
        inst = instance_from_clauses(3, [(1, 2, 3)])
        assert evaluate(inst, pa(3, (1, 1)), eager=True) is Verdict.TRUE
        # default semantics only accept complete assignments
        assert evaluate(inst, pa(3, (1, 1))) is Verdict.INDETERMINATE

    def test_contradiction_at_root(self):
        inst = instance_from_clauses(1, [(1,), (-1,)])
        assert evaluate(inst, PartialAssignment.empty(1)) is Verdict.INDETERMINATE

    def test_empty_formula(self):
        inst = random_ksat(20, 3, 0, 1)
        assert evaluate(inst, PartialAssignment.empty(20), eager=True) is Verdict.TRUE

    def test_out_of_range(self):
        with pytest.raises(InputError):
            pa(3, (4, 1))
        with pytest.raises(InputError):
            pa(3, (1, 1), (1, 0))

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 10_000), order=st.permutations(range(1, 7)),
           bits=st.lists(st.integers(0, 1), min_size=6, max_size=6), cut=st.integers(0, 6))
    def test_monotone_under_extension(self, seed, order, bits, cut):
        inst = random_ksat(6, 3, 12, seed)
        full = [(i, bits[i - 1]) for i in order]
        for eager in (False, True):
            prefix = evaluate(inst, pa(6, *full[:cut]), eager)
            if prefix is Verdict.FALSE:
                for j in range(cut, 7):
                    assert evaluate(inst, pa(6, *full[:j]), eager) is Verdict.FALSE
            complete = evaluate(inst, pa(6, *full), eager)
            assert complete in (Verdict.TRUE, Verdict.FALSE)
            assert (complete is Verdict.TRUE) == inst.satisfied_by(bits)


class TestHeuristic:
    def test_examples(self):
        assert naive_heuristic(PartialAssignment.empty(4)) == 1
        assert naive_heuristic(pa(4, (1, 0), (2, 1))) == 3
        assert naive_heuristic(pa(4, (2, 1))) == 1

    def test_complete_raises(self):
        with pytest.raises(ContractViolation):
            naive_heuristic(pa(1, (1, 0)))


class TestRandomKsat:
    def test_single_variable_set(self):
        inst = random_ksat(3, 3, 1, RngSpec(5))
        assert inst.m == 1
        assert sorted(abs(l) for l in inst.clauses[0]) == [1, 2, 3]

    def test_all_sign_patterns_reachable(self):
        patterns = {tuple(l > 0 for l in random_ksat(3, 3, 1, s).clauses[0]) for s in range(200)}
        assert len(patterns) == 8

    def test_deterministic(self):
        a = random_ksat(12, 3, 40, RngSpec(7))
        b = random_ksat(12, 3, 40, RngSpec(7))
        assert a == b and a.clauses == b.clauses
        assert random_ksat(12, 3, 40, RngSpec(8)) != a

    def test_k_bigger_than_n(self):
        with pytest.raises(InputError):
            random_ksat(2, 3, 1, 0)

    def test_variable_one_frequency(self):
        n, k, N = 10, 3, 10_000
        gen = np.random.default_rng(99)
        hits = sum(1 in {abs(l) for l in random_ksat(n, k, 1, gen).clauses[0]} for _ in range(N))
        p = k / n
        assert abs(hits / N - p) <= 3 * math.sqrt(p * (1 - p) / N)


class TestExpectedSolutions:
    def test_examples(self):
        assert expected_solution_count(4, 3, 0) == 16
        assert expected_solution_count(4, 3, 8) == pytest.approx(16 * (7 / 8) ** 8, rel=1e-12)
        assert expected_solution_count(4, 3, 8) == pytest.approx(5.4977, abs=1e-4)

    def test_brute_force_mean(self):
        gen = np.random.default_rng(2024)
        counts = np.array([len(brute_force_solutions(random_ksat(10, 3, 20, gen))) for _ in range(10_000)])
        se = counts.std(ddof=1) / math.sqrt(len(counts))
        assert abs(counts.mean() - expected_solution_count(10, 3, 20)) <= 3 * se

    def test_brute_force_matches_satisfied_by(self):
        inst = random_ksat(6, 3, 15, 4)
        sols = set(brute_force_solutions(inst))
        for x in range(64):
            bits = tuple((x >> (5 - i)) & 1 for i in range(6))
            assert (bits in sols) == inst.satisfied_by(bits)


class TestDimacs:
    def test_basic(self):
        inst = parse_dimacs("p cnf 2 1\n1 -2 0")
        assert (inst.n, inst.k, inst.clauses) == (2, 2, ((1, -2),))

    @pytest.mark.parametrize("text, fragment", [
        ("p cnf 2 1\n1 1 0", "duplicate"),
        ("p cnf 3 2\n1 2 0\n1 2 3 0", "width"),
        ("p cnf 2 2\n1 2 0", "declares 2 clauses"),
        ("p cnf 2 1\n1 x 0", "integer"),
        ("p cnf 2 1\n1 2", "unterminated"),
        ("p cnf 2 1\n0", "empty"),
    ])
    def test_errors(self, text, fragment):
        with pytest.raises(InputError, match=fragment):
            parse_dimacs(text)

    def test_round_trip(self):
        inst = random_ksat(9, 3, 17, RngSpec(3))
        text = inst.to_dimacs()
        assert "seed 3" in text
        again = parse_dimacs(text)
        assert again == inst and again.seed == 3

    def test_json_round_trip(self):
        inst = random_ksat(9, 3, 17, RngSpec(11))
        data = inst.to_json()
        assert set(data) >= {"n", "k", "m", "clauses", "seed", "algorithm_id"}
        assert KSatInstance.from_json(data) == inst


def test_rng_children_are_distinct_and_stable():
    spec = RngSpec(1)
    a, b = spec.child(0), spec.child(1)
    assert a != b
    assert spec.child(0).generator().integers(1 << 30) == a.generator().integers(1 << 30)
