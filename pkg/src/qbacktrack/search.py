"""Detection, finding and unique-solution search on backtracking trees.

Phase-estimation runs are not simulated shot by shot.  Each repetition is a
Bernoulli draw with the exact acceptance probability from
:mod:`qbacktrack.spectral`, which has the same distribution.  Walk-step
counters are exact: one phase estimation with s ancillas applies the
controlled walk step 2^s - 1 times.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .backtrack import DEFAULT_VERTEX_CAP, BacktrackTree, build_tree, subtree, truncate
from .csp import Heuristic, PartialAssignment, Predicate
from .errors import CalibrationError, InputError, PromiseViolation, ResourceError
from .spectral import EigenDecomposition, eigendecompose, qpe_accept_probability, qpe_conditional_state
from .walk import DEFAULT_MAX_DIM, build_walk

# produced by `qbacktrack calibrate` on tree_suite(seed=2015) with the default grid
CALIBRATED_BETA = 0.5
# Hoeffding with a 1/8 gap on each side of the 3/8 threshold: exp(-K/32) <= delta
CALIBRATED_GAMMA = 32.0


@dataclass(frozen=True)
class DetectionConfig:
    beta: float = CALIBRATED_BETA
    gamma: float = CALIBRATED_GAMMA
    delta: float = 0.05

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InputError(f"delta must lie in (0, 1), got {self.delta}")
        if self.beta <= 0 or self.gamma <= 0:
            raise InputError("beta and gamma must be positive")

    def precision(self, t_bound: int, n: int) -> float:
        return self.beta / math.sqrt(t_bound * max(n, 1))

    def ancillas(self, t_bound: int, n: int) -> int:
        return max(1, math.ceil(math.log2(1 / self.precision(t_bound, n))))

    @property
    def repetitions(self) -> int:
        return math.ceil(self.gamma * math.log(1 / self.delta))

    @property
    def threshold(self) -> float:
        return 3 * self.repetitions / 8

    def with_delta(self, delta: float) -> DetectionConfig:
        return replace(self, delta=delta)


@dataclass
class SearchTranscript:
    """Exact resource counters for one search run.

    Each walk step costs two reflections; each reflection evaluates the
    predicate on a vertex and its d possible children and calls the
    heuristic twice, so those counters are derived from ``walk_steps`` plus
    the classical checks made directly.
    """

    d: int = 2
    walk_steps: int = 0
    classical_predicate_evals: int = 0
    detect_calls: int = 0
    phases: Counter = field(default_factory=Counter)
    samples: int = 0
    rounds: int = 0

    def add_steps(self, steps: int, phase: str):
        self.walk_steps += steps
        self.phases[phase] += steps

    @property
    def predicate_evals(self) -> int:
        return 2 * (self.d + 1) * self.walk_steps + self.classical_predicate_evals

    @property
    def heuristic_evals(self) -> int:
        return 4 * self.walk_steps

    def to_json(self) -> dict:
        return {
            "walk_steps": self.walk_steps,
            "predicate_evals": self.predicate_evals,
            "heuristic_evals": self.heuristic_evals,
            "detect_calls": self.detect_calls,
            "samples": self.samples,
            "rounds": self.rounds,
            "per_phase": dict(self.phases),
        }


@dataclass
class DetectionOutcome:
    marked_exists: bool
    accepts: np.ndarray
    probability: float
    ancillas: int
    walk_steps: int

    @property
    def verdict(self) -> str:
        return "marked-exists" if self.marked_exists else "no-marked"


class SpectrumCache:
    """Eigendecompositions keyed by (tree identity, vertex, depth parameter)."""

    def __init__(self):
        self._store: dict = {}

    def get(self, key, tree: BacktrackTree, n: int, max_dim: int) -> EigenDecomposition:
        if key not in self._store:
            self._store[key] = eigendecompose(build_walk(tree, n, max_dim=max_dim))
        return self._store[key]


def root_acceptance(decomp: EigenDecomposition, s: int) -> float:
    r = np.zeros(decomp.T)
    r[0] = 1.0
    return qpe_accept_probability(decomp, r, s)


def detect(tree: BacktrackTree, n: int, t_bound: int, config: DetectionConfig,
           rng: np.random.Generator, transcript: SearchTranscript | None = None,
           decomp: EigenDecomposition | None = None, phase: str = "detect",
           max_dim: int = DEFAULT_MAX_DIM) -> DetectionOutcome:
    """Repeat phase estimation K times from |r> and apply the 3K/8 rule."""
    if tree.marked[0]:
        raise InputError("root is marked; check P on the root before detection")
    if t_bound < 1:
        raise InputError(f"T bound must be >= 1, got {t_bound}")
    decomp = decomp or eigendecompose(build_walk(tree, n, max_dim=max_dim))
    s = config.ancillas(t_bound, n)
    p = root_acceptance(decomp, s)
    K = config.repetitions
    accepts = rng.random(K) < p
    steps = K * (2**s - 1)
    if transcript is not None:
        transcript.add_steps(steps, phase)
        transcript.detect_calls += 1
    return DetectionOutcome(bool(accepts.sum() >= config.threshold), accepts, p, s, steps)


@dataclass
class FindResult:
    assignment: PartialAssignment | None
    vertex: int | None
    transcript: SearchTranscript
    t_guess: int = 0

    @property
    def found(self) -> bool:
        return self.vertex is not None

    def to_json(self) -> dict:
        out = {"solution": None if self.assignment is None else self.assignment.as_string(),
               "verdict": "found" if self.found else "not-found", "t_guess": self.t_guess}
        out.update(self.transcript.to_json())
        return out


class _TreeSearch:
    """Detection-driven descent over one materialized tree."""

    def __init__(self, tree: BacktrackTree, n: int, config: DetectionConfig, rng: np.random.Generator,
                 transcript: SearchTranscript, max_dim: int, cache: SpectrumCache | None = None):
        self.tree = tree
        self.n = n
        self.config = config
        self.rng = rng
        self.transcript = transcript
        self.max_dim = max_dim
        self.cache = cache or SpectrumCache()
        self._subtrees: dict[int, BacktrackTree] = {}

    def sub(self, v: int) -> BacktrackTree:
        if v not in self._subtrees:
            self._subtrees[v] = subtree(self.tree, v)
        return self._subtrees[v]

    def is_marked(self, v: int) -> bool:
        self.transcript.classical_predicate_evals += 1
        return bool(self.tree.marked[v])

    def detect_at(self, v: int, t_bound: int, config: DetectionConfig, phase: str) -> bool:
        st = self.sub(v)
        # subtree searches keep n and the T bound of the whole tree
        decomp = self.cache.get((id(self.tree), v, self.n), st, self.n, self.max_dim)
        return detect(st, self.n, t_bound, config, self.rng, self.transcript, decomp, phase).marked_exists

    def descend(self, t_bound: int, config: DetectionConfig) -> int | None:
        """One descent from the root; a verified marked vertex or None on failure."""
        cur = 0
        while True:
            nxt = None
            for c in self.tree.children[cur]:
                if self.is_marked(c):
                    return c
                if self.detect_at(c, t_bound, config, "descent"):
                    nxt = c
                    break
            if nxt is None:
                return None
            cur = nxt

    def find(self, vertex_cap: int) -> tuple[int | None, int]:
        """T-doubling loop; returns (vertex or None, final T guess)."""
        config = self.config.with_delta(min(self.config.delta, self.config.delta / max(self.n, 1) ** 2))
        t_guess = 1
        while True:
            if not self.detect_at(0, t_guess, config, "detect"):
                return None, t_guess
            v = self.descend(t_guess, config)
            if v is not None and self.is_marked(v):
                return v, t_guess
            t_guess *= 2
            if t_guess > vertex_cap:
                raise ResourceError(f"T guess exceeded the vertex cap of {vertex_cap} without a verdict")


def find_in_tree(tree: BacktrackTree, config: DetectionConfig, rng: np.random.Generator,
                 n: int | None = None, transcript: SearchTranscript | None = None,
                 vertex_cap: int = DEFAULT_VERTEX_CAP, max_dim: int = DEFAULT_MAX_DIM,
                 cache: SpectrumCache | None = None) -> FindResult:
    n = tree.n if n is None else n
    transcript = transcript or SearchTranscript(d=tree.d)
    transcript.classical_predicate_evals += 1
    if tree.marked[0]:
        return FindResult(tree.assignments[0], 0, transcript, 0)
    search = _TreeSearch(tree, n, config, rng, transcript, max_dim, cache)
    v, t_guess = search.find(vertex_cap)
    return FindResult(None if v is None else tree.assignments[v], v, transcript, t_guess)


def find_marked(P: Predicate, h: Heuristic, n: int, config: DetectionConfig, rng: np.random.Generator,
                d: int = 2, vertex_cap: int = DEFAULT_VERTEX_CAP, max_dim: int = DEFAULT_MAX_DIM) -> FindResult:
    """Find a vertex with P true, or report not-found.

    The tree is materialized classically only to simulate the walk; the
    returned vertex is always re-checked against its marking.
    """
    tree = build_tree(P, h, n, d, vertex_cap=vertex_cap)
    return find_in_tree(tree, config, rng, n, vertex_cap=vertex_cap, max_dim=max_dim)


def find_all_in_tree(tree: BacktrackTree, config: DetectionConfig, rng: np.random.Generator,
                     n: int | None = None, vertex_cap: int = DEFAULT_VERTEX_CAP,
                     max_dim: int = DEFAULT_MAX_DIM) -> tuple[list[int], SearchTranscript, int]:
    """Repeat finding, unmarking each returned vertex, until not-found.

    Returns the found vertex ids, the shared transcript and the number of
    find passes made.
    """
    transcript = SearchTranscript(d=tree.d)
    marked = tree.marked.copy()
    found: list[int] = []
    passes = 0
    while True:
        passes += 1
        current = tree.with_marked(marked)
        res = find_in_tree(current, config, rng, n, transcript, vertex_cap, max_dim)
        if not res.found:
            return found, transcript, passes
        found.append(res.vertex)
        marked[res.vertex] = False


def find_all(P: Predicate, h: Heuristic, n: int, config: DetectionConfig, rng: np.random.Generator,
             d: int = 2, vertex_cap: int = DEFAULT_VERTEX_CAP,
             max_dim: int = DEFAULT_MAX_DIM) -> tuple[list[PartialAssignment], SearchTranscript]:
    tree = build_tree(P, h, n, d, vertex_cap=vertex_cap)
    found, transcript, _ = find_all_in_tree(tree, config, rng, n, vertex_cap, max_dim)
    return [tree.assignments[v] for v in found], transcript


def sample_vertex(state: np.ndarray, rng: np.random.Generator) -> int:
    """Computational-basis measurement of a vertex-register state."""
    probs = np.abs(state) ** 2
    return int(rng.choice(len(probs), p=probs / probs.sum()))


def state_ancillas(t_bound: int, n: int, accuracy: float) -> int:
    """Ancillas giving 2^s >= sqrt(Tn) / accuracy^3."""
    return max(1, math.ceil(math.log2(math.sqrt(t_bound * max(n, 1)) / accuracy**3)))


@dataclass
class UniqueFindResult:
    assignment: PartialAssignment
    vertex: int
    depth: int
    transcript: SearchTranscript
    round_depths: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        out = {"solution": self.assignment.as_string(), "depth": self.depth,
               "round_depths": self.round_depths}
        out.update(self.transcript.to_json())
        return out


def unique_find_in_tree(tree: BacktrackTree, config: DetectionConfig, rng: np.random.Generator,
                        t_bound: int | None = None, verify_unique: bool = False,
                        max_dim: int = DEFAULT_MAX_DIM, max_restarts: int = 20) -> UniqueFindResult:
    """Locate the unique marked vertex by depth search then path sampling.

    The depth of the marked vertex is found by binary search over truncated
    trees.  Then, repeatedly, the post-selected phase-estimation state from
    the current root is measured; a non-root outcome whose subtree still
    detects as marked becomes the new root.  Failure budget: a third of
    ``config.delta`` for the depth search, a third for the round
    detections, the last third is slack since the final check is exact.
    """
    n = tree.n
    transcript = SearchTranscript(d=tree.d)
    if verify_unique and len(tree.marked_ids) != 1:
        raise PromiseViolation(f"expected exactly one marked vertex, found {len(tree.marked_ids)}")
    transcript.classical_predicate_evals += 1
    if tree.marked[0]:
        return UniqueFindResult(tree.assignments[0], 0, 0, transcript)
    t_bound = tree.T if t_bound is None else t_bound
    logn = max(1, math.ceil(math.log2(n + 1)))
    depth_cfg = config.with_delta(config.delta / 3 / (logn + 1))
    max_rounds = 4 * logn + 4
    round_cfg = config.with_delta(config.delta / 3 / max_rounds)
    accuracy = 1 / (2 * logn)
    cache = SpectrumCache()

    def detect_rooted(t: BacktrackTree, key, phase: str, cfg: DetectionConfig) -> bool:
        decomp = cache.get(key, t, t.n, max_dim)
        return detect(t, t.n, t_bound, cfg, rng, transcript, decomp, phase).marked_exists

    for _ in range(max_restarts):
        lo, hi = 1, n
        while lo < hi:
            mid = (lo + hi) // 2
            trunc = truncate(tree, mid).with_n(mid)
            if detect_rooted(trunc, ("depth", mid), "depth_search", depth_cfg):
                hi = mid
            else:
                lo = mid + 1
        level = lo
        work = truncate(tree, level).with_n(level)
        cur, round_depths = 0, []
        for _ in range(max_rounds):
            transcript.rounds += 1
            remaining = level - int(work.depth[cur])
            if remaining == 0 or work.is_leaf(cur):
                break
            sub = subtree(work, cur)
            decomp = cache.get(("work", level, cur), sub, sub.n, max_dim)
            s = state_ancillas(t_bound, remaining, accuracy)
            r = np.zeros(sub.T)
            r[0] = 1.0
            p, state = qpe_conditional_state(decomp, r, s)
            tries = int(rng.geometric(p))
            transcript.add_steps(tries * (2**s - 1), "sampling")
            transcript.samples += 1
            y = sample_vertex(state, rng)
            if y == 0:
                continue
            # subtree ids are depth-first, so map back through the subtree order
            cand = _subtree_ids(work, cur)[y]
            round_depths.append(int(sub.depth[y]))
            transcript.classical_predicate_evals += 1
            if work.marked[cand]:
                return UniqueFindResult(work.assignments[cand], _original_id(tree, work, cand),
                                        int(work.depth[cand]), transcript, round_depths)
            cand_tree = subtree(work, cand)
            if cand_tree.T > 1 and detect_rooted(cand_tree, ("work", level, cand), "round_detect", round_cfg):
                cur = cand
        # stuck: restart from the depth search
    raise PromiseViolation(
        f"no marked vertex located after {max_restarts} restarts; the unique-solution promise likely fails"
    )


def _subtree_ids(tree: BacktrackTree, v: int) -> list[int]:
    # mirrors subtree(): the root subtree is the tree itself, others are relabelled depth-first
    if v == 0:
        return list(range(tree.T))
    order, stack = [], [v]
    while stack:
        x = stack.pop()
        order.append(x)
        stack.extend(reversed(tree.children[x]))
    return order


def _original_id(tree: BacktrackTree, work: BacktrackTree, v: int) -> int:
    # truncate keeps relative order of surviving ids
    keep = [x for x in range(tree.T) if tree.depth[x] <= work.n]
    return keep[v]


def unique_find(P: Predicate, h: Heuristic, n: int, config: DetectionConfig, rng: np.random.Generator,
                d: int = 2, t_bound: int | None = None, verify_unique: bool = False,
                vertex_cap: int = DEFAULT_VERTEX_CAP, max_dim: int = DEFAULT_MAX_DIM) -> UniqueFindResult:
    tree = build_tree(P, h, n, d, vertex_cap=vertex_cap)
    return unique_find_in_tree(tree, config, rng, t_bound, verify_unique, max_dim)


@dataclass
class Calibration:
    beta: float
    gamma: float
    delta: float
    worst_unmarked: float
    worst_marked: float
    grid: list[float]

    def to_config(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in (("beta", self.beta), ("gamma", self.gamma),
                                                  ("delta", self.delta)))

    def to_json(self) -> dict:
        return asdict(self)


DEFAULT_BETA_GRID = tuple(2 ** (j / 4) for j in range(-16, 9))


def hoeffding_gamma(gap: float = 1 / 8) -> float:
    """Smallest gamma with exp(-2 K gap^2) <= delta whenever K >= gamma ln(1/delta)."""
    return 1 / (2 * gap**2)


def calibrate_constants(unmarked_trees: list[BacktrackTree], marked_trees: list[BacktrackTree],
                        delta: float, beta_grid=DEFAULT_BETA_GRID) -> Calibration:
    """Largest grid beta keeping every unmarked tree's acceptance <= 1/4.

    Acceptance is evaluated with the tree's own T and n as the bounds.
    Marked trees are only reported (their acceptance does not depend on beta).
    """
    spectra = [(t, eigendecompose(build_walk(t))) for t in unmarked_trees]
    chosen = None
    worst_u = None
    for beta in sorted(beta_grid, reverse=True):
        cfg = DetectionConfig(beta, hoeffding_gamma(), delta)
        worst = max((root_acceptance(dc, cfg.ancillas(t.T, t.n)) for t, dc in spectra), default=0.0)
        if worst <= 0.25:
            chosen, worst_u = beta, worst
            break
    if chosen is None:
        cfg = DetectionConfig(min(beta_grid), hoeffding_gamma(), delta)
        bad = max(spectra, key=lambda p: root_acceptance(p[1], cfg.ancillas(p[0].T, p[0].n)))[0]
        raise CalibrationError(f"no beta in the grid keeps acceptance <= 1/4; worst tree has T={bad.T}")
    cfg = DetectionConfig(chosen, hoeffding_gamma(), delta)
    worst_m = min((root_acceptance(eigendecompose(build_walk(t)), cfg.ancillas(t.T, t.n))
                   for t in marked_trees), default=1.0)
    return Calibration(chosen, hoeffding_gamma(), delta, worst_u, worst_m, list(beta_grid))
