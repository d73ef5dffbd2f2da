"""Families of small trees for calibration and property checks.

Shapes: paths, stars, brooms (path then star), complete binary trees,
random recursive trees, random bounded-branching trees and NaiveBt trees of
random 3-SAT instances.  Every tree has T <= 512.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backtrack import BacktrackTree, build_tree
from .csp import naive_heuristic, random_ksat

MAX_SUITE_T = 512


@dataclass(frozen=True)
class SuiteTree:
    label: str
    tree: BacktrackTree


def path_tree(length: int) -> BacktrackTree:
    return BacktrackTree.from_parents([-1] + list(range(length)))


def star_tree(leaves: int, n: int = 1) -> BacktrackTree:
    return BacktrackTree.from_parents([-1] + [0] * leaves, n=n)


def broom_tree(handle: int, bristles: int) -> BacktrackTree:
    parents = [-1] + list(range(handle)) + [handle] * bristles
    return BacktrackTree.from_parents(parents)


def complete_tree(depth: int, arity: int = 2) -> BacktrackTree:
    parents = [-1]
    frontier = [0]
    for _ in range(depth):
        nxt = []
        for x in frontier:
            for _ in range(arity):
                parents.append(x)
                nxt.append(len(parents) - 1)
        frontier = nxt
    return BacktrackTree.from_parents(parents)


def random_recursive_tree(T: int, rng: np.random.Generator) -> BacktrackTree:
    return BacktrackTree.from_parents([-1] + [int(rng.integers(0, i)) for i in range(1, T)])


def random_branching_tree(T: int, rng: np.random.Generator, arity: int = 2) -> BacktrackTree:
    """Grow by attaching to a uniformly chosen vertex with spare capacity."""
    parents = [-1]
    kids = [0]
    open_ = [0]
    while len(parents) < T:
        x = open_[int(rng.integers(len(open_)))]
        parents.append(x)
        kids.append(0)
        kids[x] += 1
        if kids[x] == arity:
            open_.remove(x)
        open_.append(len(parents) - 1)
    return BacktrackTree.from_parents(parents)


def ksat_tree(n: int, m: int, rng: np.random.Generator, k: int = 3) -> BacktrackTree:
    inst = random_ksat(n, k, m, rng)
    return build_tree(inst.predicate(), naive_heuristic, n)


def unmarked(tree: BacktrackTree) -> BacktrackTree:
    return tree.with_marked(np.zeros(tree.T, dtype=bool))


def mark_deepest_leaf(tree: BacktrackTree, rng: np.random.Generator) -> BacktrackTree:
    """Unique marked vertex: a random leaf of maximal depth, with n set to that depth."""
    deepest = [x for x in range(tree.T) if tree.is_leaf(x) and tree.depth[x] == tree.max_depth]
    marked = np.zeros(tree.T, dtype=bool)
    marked[deepest[int(rng.integers(len(deepest)))]] = True
    return tree.with_marked(marked).with_n(tree.max_depth)


def mark_random(tree: BacktrackTree, rng: np.random.Generator, count: int = 1) -> BacktrackTree:
    """Mark ``count`` random non-root vertices; descendants of marked vertices are dropped."""
    if tree.T < 2:
        raise ValueError("need a non-root vertex to mark")
    chosen = rng.choice(np.arange(1, tree.T), size=min(count, tree.T - 1), replace=False)
    marked = np.zeros(tree.T, dtype=bool)
    marked[chosen] = True
    # a marked vertex is a leaf of the backtracking tree
    keep = [0]
    for x in keep:
        if not marked[x]:
            keep.extend(tree.children[x])
    keep.sort()
    new_id = {old: i for i, old in enumerate(keep)}
    parents = [-1] + [new_id[int(tree.parent[x])] for x in keep[1:]]
    return BacktrackTree.from_parents(parents, marked[keep], n=tree.n)


def base_shapes(rng: np.random.Generator, count: int) -> list[SuiteTree]:
    """``count`` unmarked trees cycling through the shape families."""
    out: list[SuiteTree] = []
    i = 0
    while len(out) < count:
        kind = i % 7
        if kind == 0:
            t = path_tree(int(rng.integers(1, 40)))
            label = f"path{t.T}"
        elif kind == 1:
            t = star_tree(int(rng.integers(1, 60)))
            label = f"star{t.T}"
        elif kind == 2:
            t = broom_tree(int(rng.integers(1, 20)), int(rng.integers(1, 30)))
            label = f"broom{t.T}"
        elif kind == 3:
            t = complete_tree(int(rng.integers(1, 8)))
            label = f"binary{t.T}"
        elif kind == 4:
            t = random_recursive_tree(int(rng.integers(2, 300)), rng)
            label = f"recursive{t.T}"
        elif kind == 5:
            t = random_branching_tree(int(rng.integers(2, 300)), rng, arity=int(rng.integers(2, 4)))
            label = f"branching{t.T}"
        else:
            n = int(rng.integers(4, 10))
            t = ksat_tree(n, int(rng.integers(n, 5 * n)), rng)
            label = f"ksat{t.T}"
        i += 1
        if t.T > MAX_SUITE_T:
            continue
        out.append(SuiteTree(label, t))
    return out


def tree_suite(seed: int = 2015, count: int = 105) -> dict[str, list[SuiteTree]]:
    """Deterministic suite with ``unmarked``, ``unique`` and ``marked`` families.

    ``unique`` trees have one marked leaf at depth n; ``marked`` trees have
    one to three marked vertices anywhere below the root.
    """
    rng = np.random.default_rng(seed)
    shapes = base_shapes(rng, count)
    suite = {"unmarked": [], "unique": [], "marked": []}
    for st in shapes:
        suite["unmarked"].append(SuiteTree(st.label, unmarked(st.tree)))
        if st.tree.T >= 2:
            suite["unique"].append(SuiteTree(st.label, mark_deepest_leaf(st.tree, rng)))
            t = mark_random(st.tree, rng, count=int(rng.integers(1, 4)))
            suite["marked"].append(SuiteTree(st.label, t))
    return suite
