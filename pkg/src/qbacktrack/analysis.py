"""Expected NaiveBt tree sizes for random k-SAT and the average-case harness.

A level-l vertex of the NaiveBt tree is an assignment to variables 1..l
that falsifies no clause living entirely inside those variables, so by
linearity of expectation

    E = sum_l 2^l (1 - C(l,k) / (2^k C(n,k)))^m.

Sums are taken in mpmath; individual terms span hundreds of orders of
magnitude once m grows like n^3.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import mpmath
import numpy as np

from .backtrack import DEFAULT_VERTEX_CAP, build_tree, run_backtracking
from .csp import RngSpec, expected_solution_count, naive_heuristic, random_ksat
from .errors import InputError, ResourceError
from .search import DetectionConfig, SearchTranscript, detect, find_in_tree
from .spectral import eigendecompose
from .walk import DEFAULT_MAX_DIM, build_walk

mpmath.mp.dps = 60


@dataclass(frozen=True)
class TreeSizeModel:
    n: int
    k: int
    m: int
    E: float
    log2_E: float
    log2_terms: tuple[float, ...]
    expected_solutions: float
    in_proposition_range: bool

    @property
    def alpha(self) -> float:
        return self.m / self.n

    @property
    def terms(self) -> list[float]:
        return [2.0**t for t in self.log2_terms]

    @property
    def lower(self) -> float:
        """Largest single term."""
        return 2.0 ** max(self.log2_terms)

    @property
    def upper(self) -> float:
        return (self.n + 1) * self.lower


def level_consistency_probability(n: int, k: int, m: int, level: int) -> float:
    """Chance a fixed assignment to variables 1..level survives all m clauses."""
    q = mpmath.mpf(math.comb(level, k)) / (mpmath.mpf(2) ** k * math.comb(n, k))
    return float((1 - q) ** m)


def expected_tree_size(n: int, k: int, m: int) -> TreeSizeModel:
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n, got n={n}, k={k}")
    if m < 0:
        raise InputError(f"negative clause count {m}")
    denom = mpmath.mpf(2) ** k * math.comb(n, k)
    logs = []
    total = mpmath.mpf(0)
    for level in range(n + 1):
        term = mpmath.mpf(2) ** level * (1 - math.comb(level, k) / denom) ** m
        total += term
        logs.append(float(mpmath.log(term, 2)) if term > 0 else -math.inf)
    alpha = m / n
    return TreeSizeModel(
        n, k, m, float(total), float(mpmath.log(total, 2)), tuple(logs),
        expected_solution_count(n, k, m), 1 <= alpha <= n ** (k - 1),
    )


def exponent_bounds(k: int, alpha: float) -> tuple[float, float]:
    """Exponents (C, C') with 2^{C'n} <~ E <~ n 2^{Cn} for clause density alpha."""
    if alpha <= 0 or k < 2:
        raise InputError(f"need alpha > 0 and k >= 2, got alpha={alpha}, k={k}")
    base = (2**k * math.log(2) / (alpha * k)) ** (1 / (k - 1))
    C = base * (1 - 1 / k)
    C_prime = base * (1 - 1 / k - math.log(2) / (alpha * k**2) * base)
    return C, C_prime


def satisfiability_cutoff(n: int) -> float:
    """Clause count above which random 3-SAT is satisfiable with probability O(2^-n)."""
    return 16 * n / math.log(2)


@dataclass(frozen=True)
class RuntimeDistribution:
    n: int
    c: float
    support: np.ndarray
    probs: np.ndarray
    log2_normalizer: float

    def sample(self, rng: np.random.Generator, size: int | None = None):
        return rng.choice(self.support, size=size, p=self.probs)

    def mean(self, f) -> float:
        return float(np.sum(self.probs * np.array([f(m) for m in self.support])))


def heavy_tail_distribution(n: int, c: float = 0.454) -> RuntimeDistribution:
    """p_m proportional to 2^{-c n^{3/2} / sqrt(m)} on 16n/ln 2 < m <= n^3."""
    if n < 4:
        raise InputError(f"n={n} too small; need n >= 4")
    lo = math.floor(satisfiability_cutoff(n)) + 1
    hi = n**3
    if lo > hi:
        raise InputError(f"empty support for n={n}: 16n/ln2 = {satisfiability_cutoff(n):.2f} >= n^3")
    support = np.arange(lo, hi + 1)
    log2w = -c * n**1.5 / np.sqrt(support)
    top = log2w.max()
    w = np.exp2(log2w - top)
    norm = w.sum()
    return RuntimeDistribution(n, c, support, w / norm, float(top + math.log2(norm)))


@dataclass
class TrialRow:
    n: int
    m: int
    seed: int
    T: int
    walk_steps: int
    detect_steps: int
    satisfiable: bool
    solutions: int


@dataclass
class NSummary:
    n: int
    samples: int
    classical_mean: float
    classical_se: float
    quantum_mean: float
    quantum_se: float

    @property
    def ratio(self) -> float:
        return self.classical_mean / self.quantum_mean if self.quantum_mean else math.nan


@dataclass
class SeparationReport:
    rows: list[TrialRow] = field(default_factory=list)
    summaries: list[NSummary] = field(default_factory=list)
    partial: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def ratios(self) -> list[float]:
        return [s.ratio for s in self.summaries]

    def ratio_increasing(self) -> bool:
        r = self.ratios
        return all(b > a for a, b in zip(r, r[1:]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["n", "m", "seed", "T", "walk_steps", "detect_steps", "satisfiable", "solutions"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow(asdict(r))
        return buf.getvalue()

    def summary_json(self) -> dict:
        return {
            "per_n": [dict(asdict(s), ratio=s.ratio) for s in self.summaries],
            "ratio_increasing": self.ratio_increasing() if self.summaries else None,
            "partial": self.partial,
            "notes": self.notes,
        }


def _mean_se(xs: list[float]) -> tuple[float, float]:
    if not xs:
        return math.nan, math.nan
    mean = statistics.fmean(xs)
    se = statistics.stdev(xs) / math.sqrt(len(xs)) if len(xs) > 1 else 0.0
    return mean, se


def run_trial(n: int, m: int, spec: RngSpec, config: DetectionConfig, k: int = 3,
              vertex_cap: int = DEFAULT_VERTEX_CAP, max_dim: int = DEFAULT_MAX_DIM) -> TrialRow:
    """One paired trial: NaiveBt tree size and quantum walk steps on the same instance."""
    gen = spec.generator()
    inst = random_ksat(n, k, m, gen)
    P = inst.predicate()
    stats = run_backtracking(P, naive_heuristic, n)
    tree = build_tree(P, naive_heuristic, n, vertex_cap=vertex_cap)
    # the tree built above is what the quantum walk acts on
    if tree.marked[0]:
        detect_steps = 0
    else:
        dc = eigendecompose(build_walk(tree, n, max_dim=max_dim))
        detect_steps = detect(tree, n, tree.T, config, gen, decomp=dc).walk_steps
    res = find_in_tree(tree, config, gen, n, SearchTranscript(d=2), vertex_cap, max_dim)
    return TrialRow(n, m, spec.seed, stats.tree_vertices, res.transcript.walk_steps, detect_steps,
                    bool(stats.solutions), len(stats.solutions))


def separation_experiment(ns, samples: int, config: DetectionConfig, rng: RngSpec, k: int = 3,
                          c: float = 0.454, vertex_cap: int = DEFAULT_VERTEX_CAP,
                          max_dim: int = DEFAULT_MAX_DIM, workers: int = 1) -> SeparationReport:
    """Paired classical/quantum cost over m drawn from the heavy-tailed law.

    Per-trial streams are children of ``rng`` indexed by (n, trial), so any
    row can be regenerated from its recorded seed.
    """
    report = SeparationReport()
    for n in ns:
        dist = heavy_tail_distribution(n, c)
        m_gen = rng.child(10_000 + n).generator()
        ms = [int(m) for m in dist.sample(m_gen, samples)] if samples else []
        specs = [rng.child(n * 1_000_003 + i) for i in range(samples)]

        def one(args):
            m, spec = args
            try:
                return run_trial(n, m, spec, config, k, vertex_cap, max_dim)
            except ResourceError as exc:
                return exc

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                results = list(pool.map(one, zip(ms, specs)))
        else:
            results = [one(a) for a in zip(ms, specs)]
        rows = []
        for res in results:
            if isinstance(res, ResourceError):
                report.partial = True
                report.notes.append(f"n={n}: {res}")
            else:
                rows.append(res)
        report.rows.extend(rows)
        if rows:
            cm, cse = _mean_se([r.T for r in rows])
            qm, qse = _mean_se([r.walk_steps for r in rows])
            report.summaries.append(NSummary(n, len(rows), cm, cse, qm, qse))
    return report
