"""Classical backtracking and the tree of valid partial assignments.

:func:`run_backtracking` is the plain recursive search with counters.
:func:`build_tree` materializes the same tree as a :class:`BacktrackTree`,
which is what the walk operators are built on.  Vertex ids follow
depth-first discovery order with children sorted by branch value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .csp import Heuristic, PartialAssignment, Predicate, Verdict
from .errors import ContractViolation, InputError, ResourceError

DEFAULT_VERTEX_CAP = 2**20


@dataclass(frozen=True, eq=False)
class BacktrackTree:
    """Rooted tree; vertex 0 is the root.

    ``n`` is the depth bound the tree was built under (not necessarily its
    actual height) and ``d`` the branching domain size.
    """

    parent: np.ndarray
    children: tuple[tuple[int, ...], ...]
    depth: np.ndarray
    marked: np.ndarray
    assignments: tuple[PartialAssignment | None, ...]
    n: int
    d: int

    def __post_init__(self):
        for arr in (self.parent, self.depth, self.marked):
            arr.setflags(write=False)

    @property
    def T(self) -> int:
        return len(self.parent)

    @property
    def root(self) -> int:
        return 0

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    def degree(self, x: int) -> int:
        """Undirected degree; the root has no parent edge."""
        return len(self.children[x]) + (0 if x == 0 else 1)

    @property
    def marked_ids(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.marked)]

    def path_to(self, x: int) -> list[int]:
        """Vertices from the root to ``x`` inclusive."""
        path = [x]
        while path[-1] != 0:
            path.append(int(self.parent[path[-1]]))
        return path[::-1]

    def is_leaf(self, x: int) -> bool:
        return not self.children[x]

    def with_marked(self, marked: Sequence[bool]) -> BacktrackTree:
        """Same shape, different marking."""
        marked = np.asarray(marked, dtype=bool).copy()
        if marked.shape != (self.T,):
            raise InputError(f"marking of shape {marked.shape} for T={self.T}")
        return BacktrackTree(
            self.parent.copy(), self.children, self.depth.copy(), marked, self.assignments, self.n, self.d
        )

    def with_n(self, n: int) -> BacktrackTree:
        return BacktrackTree(
            self.parent.copy(), self.children, self.depth.copy(), self.marked.copy(),
            self.assignments, int(n), self.d,
        )

    def to_json(self) -> dict:
        verts = []
        for i in range(self.T):
            a = self.assignments[i]
            verts.append({
                "id": i,
                "parent": None if i == 0 else int(self.parent[i]),
                "children": list(self.children[i]),
                "depth": int(self.depth[i]),
                "marked": bool(self.marked[i]),
                "assignment": None if a is None else a.to_json(),
            })
        return {"n": self.n, "d": self.d, "T": self.T, "vertices": verts}

    @classmethod
    def from_json(cls, data: dict | str) -> BacktrackTree:
        if isinstance(data, str):
            data = json.loads(data)
        verts = sorted(data["vertices"], key=lambda v: v["id"])
        T = len(verts)
        if [v["id"] for v in verts] != list(range(T)):
            raise InputError("vertex ids must be 0..T-1")
        if "T" in data and int(data["T"]) != T:
            raise InputError(f"header says T={data['T']}, found {T} vertices")
        n = int(data["n"])
        parent = np.array([-1 if v["parent"] is None else int(v["parent"]) for v in verts])
        if T == 0 or parent[0] != -1 or (parent[1:] < 0).any():
            raise InputError("vertex 0 must be the unique root")
        children = tuple(tuple(int(c) for c in v["children"]) for v in verts)
        for x, kids in enumerate(children):
            if any(parent[c] != x for c in kids):
                raise InputError(f"children of {x} disagree with parent pointers")
        assignments = tuple(
            None if v.get("assignment") is None else PartialAssignment(n, tuple(map(tuple, v["assignment"])))
            for v in verts
        )
        tree = cls(
            parent, children, np.array([int(v["depth"]) for v in verts]),
            np.array([bool(v["marked"]) for v in verts]), assignments, n, int(data["d"]),
        )
        _check_depths(tree)
        return tree

    @classmethod
    def from_parents(cls, parents: Sequence[int], marked: Sequence[bool] | None = None,
                     n: int | None = None) -> BacktrackTree:
        """Build a tree from a parent list (``parents[0] = -1``).

        Children keep id order.  Assignments are synthesized so that a vertex
        at depth l assigns variables 1..l the child indices along its path,
        which makes :func:`tree_problem` reproduce the tree.
        """
        parent = np.asarray(parents, dtype=int)
        T = len(parent)
        if T == 0 or parent[0] != -1:
            raise InputError("parents[0] must be -1 (the root)")
        kids: list[list[int]] = [[] for _ in range(T)]
        for x in range(1, T):
            p = int(parent[x])
            if not 0 <= p < T or p == x:
                raise InputError(f"bad parent {p} for vertex {x}")
            kids[p].append(x)
        depth = np.full(T, -1)
        depth[0] = 0
        order = [0]
        for x in order:
            for c in kids[x]:
                depth[c] = depth[x] + 1
                order.append(c)
        if len(order) != T:
            raise InputError("parent list does not describe a tree rooted at 0")
        max_depth = int(depth.max())
        n = max(max_depth, 1) if n is None else int(n)
        if n < max_depth:
            raise InputError(f"depth bound n={n} below tree height {max_depth}")
        d = max(1, max(len(k) for k in kids))
        assign: list[PartialAssignment | None] = [None] * T
        assign[0] = PartialAssignment.empty(n)
        for x in order:
            for w, c in enumerate(kids[x]):
                assign[c] = assign[x].extend(int(depth[x]) + 1, w)
        marked = np.zeros(T, dtype=bool) if marked is None else np.asarray(marked, dtype=bool).copy()
        return cls(parent.copy(), tuple(tuple(k) for k in kids), depth, marked, tuple(assign), n, d)


def _check_depths(tree: BacktrackTree):
    if tree.depth[0] != 0:
        raise InputError("root depth must be 0")
    for x in range(1, tree.T):
        if tree.depth[x] != tree.depth[tree.parent[x]] + 1:
            raise InputError(f"depth of {x} is not parent depth + 1")
    if tree.max_depth > tree.n:
        raise InputError(f"tree height {tree.max_depth} exceeds n={tree.n}")


@dataclass
class TraversalStats:
    tree_vertices: int = 0
    predicate_evaluations: int = 0
    heuristic_evaluations: int = 0
    solutions: list[PartialAssignment] = field(default_factory=list)
    depth_histogram: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "T": self.tree_vertices,
            "predicate_evals": self.predicate_evaluations,
            "heuristic_evals": self.heuristic_evaluations,
            "solutions": [s.as_string() for s in self.solutions],
            "depth_histogram": self.depth_histogram,
        }


def _branch_index(h: Heuristic, x: PartialAssignment) -> int:
    j = h(x)
    if not 1 <= j <= x.n or j in x.values:
        raise ContractViolation(f"heuristic returned index {j} for assignment {x.pairs}")
    return j


def run_backtracking(P: Predicate, h: Heuristic, n: int, d: int = 2) -> TraversalStats:
    """Explore the whole backtracking tree, collecting every x with P(x) true.

    Each recursive call evaluates P once; ``tree_vertices`` counts the calls
    whose assignment is valid, with the root always counted.
    """
    stats = TraversalStats(depth_histogram=[0] * (n + 1))

    def bt(x: PartialAssignment, is_root: bool = False):
        stats.predicate_evaluations += 1
        verdict = P(x)
        if verdict is Verdict.FALSE:
            if is_root:
                stats.tree_vertices += 1
                stats.depth_histogram[0] += 1
            return
        stats.tree_vertices += 1
        stats.depth_histogram[len(x)] += 1
        if verdict is Verdict.TRUE:
            stats.solutions.append(x)
            return
        if x.is_complete:
            return
        stats.heuristic_evaluations += 1
        j = _branch_index(h, x)
        for w in range(d):
            bt(x.extend(j, w))

    bt(PartialAssignment.empty(n), is_root=True)
    return stats


def build_tree(P: Predicate, h: Heuristic, n: int, d: int = 2, depth_limit: int | None = None,
               vertex_cap: int = DEFAULT_VERTEX_CAP) -> BacktrackTree:
    """Materialize the tree of valid partial assignments.

    With ``depth_limit`` the tree is cut at that depth; vertices there are
    leaves but still carry their marking.
    """
    limit = n if depth_limit is None else int(depth_limit)
    if not 0 <= limit <= n:
        raise InputError(f"depth_limit {depth_limit} outside 0..{n}")
    parent: list[int] = []
    depth: list[int] = []
    marked: list[bool] = []
    assign: list[PartialAssignment] = []
    children: list[list[int]] = []

    def visit(x: PartialAssignment, par: int, verdict: Verdict) -> int:
        vid = len(parent)
        if vid >= vertex_cap:
            raise ResourceError(f"backtracking tree exceeds the vertex cap of {vertex_cap}")
        parent.append(par)
        depth.append(len(x))
        marked.append(verdict is Verdict.TRUE)
        assign.append(x)
        children.append([])
        if verdict is Verdict.TRUE or x.is_complete or len(x) >= limit:
            return vid
        j = _branch_index(h, x)
        for w in range(d):
            y = x.extend(j, w)
            v = P(y)
            if v is not Verdict.FALSE:
                children[vid].append(visit(y, vid, v))
        return vid

    root = PartialAssignment.empty(n)
    root_verdict = P(root)
    if root_verdict is Verdict.FALSE:
        # invalid root: Algorithm stops immediately, tree is the bare root
        parent, depth, marked, assign, children = [-1], [0], [False], [root], [[]]
    else:
        visit(root, -1, root_verdict)
    return BacktrackTree(
        np.array(parent), tuple(tuple(c) for c in children), np.array(depth),
        np.array(marked, dtype=bool), tuple(assign), n, d,
    )


def subtree(tree: BacktrackTree, vertex: int) -> BacktrackTree:
    """Rooted subtree at ``vertex``, relabelled in depth-first order.

    Depths restart at 0 and the depth bound drops by the depth of ``vertex``.
    """
    if not 0 <= vertex < tree.T:
        raise InputError(f"unknown vertex id {vertex} (T={tree.T})")
    if vertex == 0:
        return tree
    order = []
    stack = [vertex]
    while stack:
        x = stack.pop()
        order.append(x)
        stack.extend(reversed(tree.children[x]))
    new_id = {old: i for i, old in enumerate(order)}
    base = int(tree.depth[vertex])
    parent = np.array([-1] + [new_id[int(tree.parent[x])] for x in order[1:]])
    children = tuple(tuple(new_id[c] for c in tree.children[x]) for x in order)
    depth = np.array([int(tree.depth[x]) - base for x in order])
    marked = np.array([bool(tree.marked[x]) for x in order], dtype=bool)
    assignments = tuple(tree.assignments[x] for x in order)
    return BacktrackTree(parent, children, depth, marked, assignments, tree.n - base, tree.d)


def truncate(tree: BacktrackTree, depth_limit: int) -> BacktrackTree:
    """Keep only vertices at depth <= ``depth_limit``; ids stay in discovery order."""
    keep = [x for x in range(tree.T) if tree.depth[x] <= depth_limit]
    new_id = {old: i for i, old in enumerate(keep)}
    parent = np.array([-1] + [new_id[int(tree.parent[x])] for x in keep[1:]])
    children = tuple(tuple(new_id[c] for c in tree.children[x] if c in new_id) for x in keep)
    return BacktrackTree(
        parent, children, tree.depth[keep].copy(), tree.marked[keep].copy(),
        tuple(tree.assignments[x] for x in keep), tree.n, tree.d,
    )


def tree_problem(tree: BacktrackTree):
    """Predicate and heuristic whose backtracking tree is ``tree``.

    Uses the synthetic labelling of :meth:`BacktrackTree.from_parents`:
    the heuristic branches on variable ``len(x) + 1`` and a child's value is
    its position among its siblings.  Returns ``(P, h, n, d)``.
    """
    index = {}
    for x in range(tree.T):
        labels = []
        for a, b in zip(tree.path_to(x)[:-1], tree.path_to(x)[1:]):
            labels.append(tree.children[a].index(b))
        index[tuple(labels)] = x

    def P(x: PartialAssignment) -> Verdict:
        key = tuple(v for _, v in x.pairs)
        vid = index.get(key)
        if vid is None:
            return Verdict.FALSE
        return Verdict.TRUE if tree.marked[vid] else Verdict.INDETERMINATE

    def h(x: PartialAssignment) -> int:
        return len(x) + 1

    return P, h, tree.n, tree.d
