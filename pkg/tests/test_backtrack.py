import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbacktrack.backtrack import (BacktrackTree, build_tree, run_backtracking, subtree, tree_problem,
                                  truncate)
from qbacktrack.csp import brute_force_solutions, instance_from_clauses, naive_heuristic, random_ksat
from qbacktrack.errors import InputError, ResourceError
from qbacktrack.suite import complete_tree


def tree_of(n, clauses, **kw):
    inst = instance_from_clauses(n, clauses)
    return build_tree(inst.predicate(), naive_heuristic, n, **kw)


def test_contradiction_is_single_vertex():
    t = tree_of(1, [(1,), (-1,)])
    assert t.T == 1 and not t.marked[0]


def test_no_clauses_n2():
    t = tree_of(2, [])
    assert t.T == 7
    assert t.marked_ids == [2, 3, 5, 6]
    assert [t.assignments[v].as_string() for v in t.marked_ids] == ["00", "01", "10", "11"]


def test_single_clause_n2():
    t = tree_of(2, [(1, 2)])
    assert t.T == 6
    assert len(t.marked_ids) == 3


def test_depth_limits():
    assert tree_of(2, [(1, 2)], depth_limit=0).T == 1
    assert tree_of(2, [(1, 2)], depth_limit=1).T == 3
    full = tree_of(2, [(1, 2)])
    assert tree_of(2, [(1, 2)], depth_limit=2).to_json() == full.to_json()
    assert truncate(full, 1).T == 3


def test_degree_convention():
    t = tree_of(2, [])
    assert t.degree(0) == 2
    assert t.degree(1) == 3
    assert t.degree(3) == 1


@pytest.mark.parametrize("n", range(1, 9))
def test_complete_tree_size(n):
    t = tree_of(n, [])
    assert t.T == 2 ** (n + 1) - 1
    assert run_backtracking(instance_from_clauses(n, []).predicate(), naive_heuristic, n).tree_vertices == t.T


def test_subtree_examples():
    t = complete_tree(2)
    assert subtree(t, 0).to_json() == t.to_json()
    assert subtree(t, 1).T == 3 and subtree(t, 2).T == 3
    leaf = t.children[1][0]
    assert subtree(t, leaf).T == 1
    assert subtree(t, 1).n == t.n - 1
    assert subtree(t, 1).degree(0) == 2
    with pytest.raises(InputError):
        subtree(t, 99)


def test_vertex_cap():
    with pytest.raises(ResourceError, match="64"):
        tree_of(8, [], vertex_cap=64)


def test_json_round_trip():
    inst = random_ksat(8, 3, 20, 5)
    t = build_tree(inst.predicate(), naive_heuristic, 8)
    again = BacktrackTree.from_json(t.to_json())
    assert again.to_json() == t.to_json()
    assert again.assignments == t.assignments


def test_tree_problem_regenerates_tree():
    rng = np.random.default_rng(0)
    parents = [-1] + [int(rng.integers(0, i)) for i in range(1, 40)]
    bare = BacktrackTree.from_parents(parents)
    marked = [bare.is_leaf(x) and x % 3 == 0 for x in range(40)]
    t = bare.with_marked(marked)
    again = build_tree(*tree_problem(t))
    # ids come back in depth-first order, the shape and marking survive
    assert again.T == t.T
    assert sorted(again.depth) == sorted(t.depth)
    assert len(again.marked_ids) == len(t.marked_ids)
    twice = build_tree(*tree_problem(again))
    assert twice.to_json() == again.to_json()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(1, 9), m=st.integers(0, 30))
def test_stats_match_tree_and_brute_force(seed, n, m):
    k = min(3, n)
    inst = random_ksat(n, k, m, seed)
    P = inst.predicate()
    stats = run_backtracking(P, naive_heuristic, n)
    tree = build_tree(P, naive_heuristic, n)
    assert stats.tree_vertices == tree.T
    assert sum(stats.depth_histogram) == tree.T
    assert sorted(s.as_string() for s in stats.solutions) == \
        sorted("".join(map(str, b)) for b in brute_force_solutions(inst))
    for x in range(1, tree.T):
        assert tree.depth[x] == tree.depth[tree.parent[x]] + 1
        assert tree.marked[x] == (len(tree.assignments[x]) == n and inst.satisfied_by(
            [tree.assignments[x].values[i] for i in range(1, n + 1)]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), m=st.integers(0, 25))
def test_adding_a_clause_never_grows_tree(seed, m):
    gen = np.random.default_rng(seed)
    inst = random_ksat(8, 3, m + 1, gen)
    fewer = instance_from_clauses(8, inst.clauses[:m])
    t_more = build_tree(inst.predicate(), naive_heuristic, 8).T
    t_fewer = build_tree(fewer.predicate(), naive_heuristic, 8).T
    assert t_more <= t_fewer
