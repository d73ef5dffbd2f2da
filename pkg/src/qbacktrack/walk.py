"""Walk reflections on the vertex space of a backtracking tree.

Each unmarked vertex ``x`` owns a unit vector ``psi_x`` supported on ``x``
and its children.  Blocks of vertices at even depth (set A, root included)
are disjoint and cover every vertex, as are the odd-depth blocks (set B)
together with the root singleton, so

    R_A = I - 2 * Psi_A Psi_A^T,    R_B = I - 2 * Psi_B Psi_B^T

where the columns of ``Psi_A`` are the ``psi_x`` of unmarked x in A.  The
root vector puts weight ``sqrt(n)`` on each child, with ``n`` a parameter of
the walk rather than the height of the tree.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .backtrack import BacktrackTree
from .errors import InputError, ResourceError

DEFAULT_MAX_DIM = 4096


@dataclass(frozen=True, eq=False)
class WalkOperators:
    tree: BacktrackTree
    n: int
    psi_A: sp.csc_matrix
    psi_B: sp.csc_matrix
    centers_A: tuple[int, ...]
    centers_B: tuple[int, ...]
    max_dim: int = DEFAULT_MAX_DIM

    @property
    def T(self) -> int:
        return self.tree.T

    @property
    def in_A(self) -> np.ndarray:
        return self.tree.depth % 2 == 0

    def apply_RA(self, v: np.ndarray) -> np.ndarray:
        return v - 2 * (self.psi_A @ (self.psi_A.T @ v))

    def apply_RB(self, v: np.ndarray) -> np.ndarray:
        return v - 2 * (self.psi_B @ (self.psi_B.T @ v))

    def step(self, v: np.ndarray) -> np.ndarray:
        """One walk step, R_B R_A."""
        return self.apply_RB(self.apply_RA(v))

    def project_A(self, v: np.ndarray) -> np.ndarray:
        """Projector onto the +1 eigenspace of R_A."""
        return v - self.psi_A @ (self.psi_A.T @ v)

    def project_B(self, v: np.ndarray) -> np.ndarray:
        return v - self.psi_B @ (self.psi_B.T @ v)

    def sparse_RA(self) -> sp.csr_matrix:
        return (sp.identity(self.T, format="csr") - 2 * (self.psi_A @ self.psi_A.T)).tocsr()

    def sparse_RB(self) -> sp.csr_matrix:
        return (sp.identity(self.T, format="csr") - 2 * (self.psi_B @ self.psi_B.T)).tocsr()

    def _check_dense(self):
        if self.T > self.max_dim:
            raise ResourceError(
                f"T={self.T} exceeds the dense dimension threshold {self.max_dim}; "
                "use statevector mode (matrix-free apply_RA/apply_RB/step) instead"
            )

    def dense_RA(self) -> np.ndarray:
        self._check_dense()
        return self.sparse_RA().toarray()

    def dense_RB(self) -> np.ndarray:
        self._check_dense()
        return self.sparse_RB().toarray()

    def dense_step(self) -> np.ndarray:
        return self.dense_RB() @ self.dense_RA()

    def psi(self, x: int) -> np.ndarray:
        """Dense copy of the diffusion vector of unmarked vertex ``x``."""
        if x in self.centers_A:
            col = self.psi_A[:, self.centers_A.index(x)]
        elif x in self.centers_B:
            col = self.psi_B[:, self.centers_B.index(x)]
        else:
            raise InputError(f"vertex {x} is marked; its diffusion is the identity")
        return np.asarray(col.toarray()).ravel()

    def export_coo(self, which: str = "A") -> str:
        """Nonzeros of R_A or R_B as ``row col value`` lines."""
        mat = (self.sparse_RA() if which == "A" else self.sparse_RB()).tocoo()
        order = np.lexsort((mat.col, mat.row))
        return "".join(
            f"{mat.row[i]} {mat.col[i]} {mat.data[i]:.17g}\n" for i in order if mat.data[i] != 0.0
        )


def _diffusion_vector(tree: BacktrackTree, x: int, n: int) -> tuple[list[int], list[float]]:
    kids = list(tree.children[x])
    if x == 0:
        norm = math.sqrt(1 + len(kids) * n)
        return [0] + kids, [1 / norm] + [math.sqrt(n) / norm] * len(kids)
    w = 1 / math.sqrt(tree.degree(x))
    return [x] + kids, [w] * (len(kids) + 1)


def build_walk(tree: BacktrackTree, n: int | None = None, allow_marked_root: bool = False,
               max_dim: int = DEFAULT_MAX_DIM) -> WalkOperators:
    """Assemble R_A and R_B for ``tree`` with root weight parameter ``n``.

    ``n`` defaults to the tree's depth bound and must be at least its height.
    A marked root is rejected unless ``allow_marked_root`` is set, in which
    case its diffusion is the identity like any marked vertex.
    """
    n = tree.n if n is None else int(n)
    if tree.max_depth > n:
        raise InputError(f"tree height {tree.max_depth} exceeds the depth parameter n={n}")
    if tree.marked[0] and not allow_marked_root:
        raise InputError("root is marked; check P on the root before building a walk")
    cols = {0: ([], [], []), 1: ([], [], [])}
    centers = {0: [], 1: []}
    for x in range(tree.T):
        if tree.marked[x]:
            continue
        side = int(tree.depth[x] % 2)
        rows, vals = _diffusion_vector(tree, x, n)
        r, c, v = cols[side]
        r.extend(rows)
        c.extend([len(centers[side])] * len(rows))
        v.extend(vals)
        centers[side].append(x)

    def mat(side):
        r, c, v = cols[side]
        return sp.csc_matrix((v, (r, c)), shape=(tree.T, len(centers[side])))

    return WalkOperators(tree, n, mat(0), mat(1), tuple(centers[0]), tuple(centers[1]), max_dim)


@dataclass(frozen=True, eq=False)
class NamedVector:
    label: str
    coeffs: np.ndarray
    target: int | None = None

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalized(self) -> np.ndarray:
        return self.coeffs / self.norm

    def to_json(self) -> str:
        return json.dumps({"label": self.label, "target": self.target,
                           "coeffs": [float(c) for c in self.coeffs]})


def _check_target(walk: WalkOperators, target: int):
    tree = walk.tree
    if not 0 <= target < tree.T:
        raise InputError(f"unknown vertex id {target}")
    if not tree.marked[target]:
        raise InputError(f"vertex {target} is not marked")
    if target == 0:
        raise InputError("the root cannot be the target; it is promised unmarked")


def phi_vector(walk: WalkOperators, target: int) -> NamedVector:
    """Invariant vector of R_B R_A carried by the root-to-``target`` path.

    sqrt(n) on the root and (-1)^depth on each other path vertex.
    """
    _check_target(walk, target)
    v = np.zeros(walk.T)
    for x in walk.tree.path_to(target):
        v[x] = math.sqrt(walk.n) if x == 0 else (-1.0) ** int(walk.tree.depth[x])
    return NamedVector("phi", v, target)


def phi_normalized(walk: WalkOperators, target: int) -> NamedVector:
    phi = phi_vector(walk, target)
    return NamedVector("phi_normalized", phi.normalized(), target)


def phi_perp(walk: WalkOperators, target: int) -> NamedVector:
    """Unit vector completing the root state: |r> = a|phi'> + b|phi_perp>.

    When the target sits at depth n this is sqrt(2)|r> - |phi'>.
    """
    phi_p = phi_normalized(walk, target).coeffs
    r = np.zeros(walk.T)
    r[0] = 1.0
    rest = r - phi_p[0] * phi_p
    return NamedVector("phi_perp", rest / np.linalg.norm(rest), target)


def eta_vector(walk: WalkOperators) -> NamedVector:
    v = np.full(walk.T, math.sqrt(walk.n))
    v[0] = 1.0
    return NamedVector("eta", v)


def xi_witness(walk: WalkOperators, target: int) -> NamedVector:
    """Vector xi with Pi_A xi = 0 and Pi_B xi = phi_perp.

    Requires ``target`` to be the only marked vertex and a leaf at depth n
    (truncate or re-parameterize the walk first otherwise).
    """
    _check_target(walk, target)
    tree = walk.tree
    n = walk.n
    if len(tree.marked_ids) != 1:
        raise InputError(f"expected a unique marked vertex, found {len(tree.marked_ids)}")
    if not tree.is_leaf(target) or int(tree.depth[target]) != n:
        raise InputError(
            f"marked vertex {target} must be a leaf at depth n={n} "
            f"(depth {int(tree.depth[target])}); truncate the tree or set n to its depth"
        )
    on_path = np.zeros(tree.T, dtype=bool)
    on_path[tree.path_to(target)] = True
    alpha = np.zeros(tree.T)
    alpha[0] = 1 / math.sqrt(2)
    order = [0]
    for x in order:
        order.extend(tree.children[x])
        for y in tree.children[x]:
            if tree.depth[y] == 1:
                alpha[y] = math.sqrt(n) * alpha[0]
            elif tree.depth[y] % 2 == 1 or not on_path[x]:
                alpha[y] = alpha[x]
            elif on_path[y]:
                alpha[y] = alpha[x] - math.sqrt(2 / n)
            else:
                alpha[y] = alpha[x] - 1 / math.sqrt(2 * n)
    return NamedVector("xi", alpha, target)
