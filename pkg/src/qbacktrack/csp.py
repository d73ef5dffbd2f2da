"""Tri-valued predicates, branching heuristics and random k-SAT.

A predicate maps a :class:`PartialAssignment` to a :class:`Verdict`; a
heuristic maps an incomplete assignment to the next variable index to branch
on.  Any pair of callables with those signatures can drive the backtracking
engine in :mod:`qbacktrack.backtrack`; k-SAT is the built-in instantiation.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import cached_property, partial
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ContractViolation, InputError

DEFAULT_ALGORITHM = "numpy.PCG64"


class Verdict(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class PartialAssignment:
    """Ordered (index, value) pairs over variables ``1..n``.

    The order records the branching history; the empty tuple is the
    all-unassigned assignment.
    """

    n: int
    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        pairs = tuple((int(i), int(v)) for i, v in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if len(pairs) > self.n:
            raise InputError(f"{len(pairs)} pairs for only {self.n} variables")
        seen = set()
        for i, v in pairs:
            if not 1 <= i <= self.n:
                raise InputError(f"variable index {i} outside 1..{self.n}")
            if i in seen:
                raise InputError(f"variable {i} assigned twice in {pairs}")
            if v < 0:
                raise InputError(f"negative value {v} for variable {i}")
            seen.add(i)

    @classmethod
    def empty(cls, n: int) -> PartialAssignment:
        return cls(n, ())

    @cached_property
    def values(self) -> dict[int, int]:
        return dict(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def is_complete(self) -> bool:
        return len(self.pairs) == self.n

    def extend(self, index: int, value: int) -> PartialAssignment:
        return PartialAssignment(self.n, self.pairs + ((index, value),))

    def as_string(self) -> str:
        """Render as a length-n string with ``*`` for unassigned positions."""
        vals = self.values
        return "".join(str(vals[i]) if i in vals else "*" for i in range(1, self.n + 1))

    def to_json(self) -> list[list[int]]:
        return [[i, v] for i, v in self.pairs]


Predicate = Callable[[PartialAssignment], Verdict]
Heuristic = Callable[[PartialAssignment], int]


def naive_heuristic(x: PartialAssignment) -> int:
    """Lowest-index unassigned variable (the NaiveBt branching rule)."""
    if x.is_complete:
        raise ContractViolation("heuristic called on a complete assignment")
    vals = x.values
    for i in range(1, x.n + 1):
        if i not in vals:
            return i
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class RngSpec:
    """A seed plus the name of the generator it feeds.

    Only ``numpy.PCG64`` is supported; the name is recorded in every output
    so a stream can be regenerated bit-for-bit.
    """

    seed: int
    algorithm_id: str = DEFAULT_ALGORITHM

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise InputError(f"seed {self.seed} is not a 64-bit unsigned integer")
        if self.algorithm_id != DEFAULT_ALGORITHM:
            raise InputError(f"unknown rng algorithm {self.algorithm_id!r}")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(int(self.seed)))

    def child(self, index: int) -> RngSpec:
        """Independent stream for trial ``index``, derived via SeedSequence."""
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(index),))
        return RngSpec(int(ss.generate_state(1, np.uint64)[0]), self.algorithm_id)


def as_generator(rng: RngSpec | np.random.Generator | int) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSpec):
        return rng.generator()
    return RngSpec(int(rng)).generator()


@dataclass(frozen=True)
class KSatInstance:
    """A CNF formula whose clauses all contain exactly ``k`` distinct variables.

    Clauses are tuples of signed DIMACS literals sorted by variable index.
    """

    n: int
    k: int
    clauses: tuple[tuple[int, ...], ...]
    seed: int | None = field(default=None, compare=False)
    algorithm_id: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.k <= self.n:
            raise InputError(f"need 1 <= k <= n, got n={self.n}, k={self.k}")
        canon = []
        for clause in self.clauses:
            lits = tuple(sorted((int(l) for l in clause), key=abs))
            vars_ = [abs(l) for l in lits]
            if len(lits) != self.k:
                raise InputError(f"clause {clause} has width {len(lits)}, expected {self.k}")
            if 0 in vars_ or max(vars_) > self.n:
                raise InputError(f"clause {clause} references a variable outside 1..{self.n}")
            if len(set(vars_)) != len(vars_):
                raise InputError(f"clause {clause} repeats a variable")
            canon.append(lits)
        object.__setattr__(self, "clauses", tuple(canon))

    d = 2

    @property
    def m(self) -> int:
        return len(self.clauses)

    def predicate(self, eager: bool = False) -> Predicate:
        return partial(evaluate, self, eager=eager)

    def satisfied_by(self, bits: Sequence[int]) -> bool:
        """Check a complete assignment given as a 0/1 sequence indexed from variable 1."""
        return all(
            any((bits[abs(l) - 1] == 1) == (l > 0) for l in clause) for clause in self.clauses
        )

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "m": self.m,
            "clauses": [list(c) for c in self.clauses],
            "seed": self.seed,
            "algorithm_id": self.algorithm_id,
        }

    @classmethod
    def from_json(cls, data: dict | str) -> KSatInstance:
        if isinstance(data, str):
            data = json.loads(data)
        inst = cls(
            int(data["n"]),
            int(data["k"]),
            tuple(tuple(c) for c in data["clauses"]),
            data.get("seed"),
            data.get("algorithm_id"),
        )
        if "m" in data and int(data["m"]) != inst.m:
            raise InputError(f"header says m={data['m']} but {inst.m} clauses listed")
        return inst

    def to_dimacs(self) -> str:
        lines = []
        if self.seed is not None:
            lines.append(f"c seed {self.seed} algorithm {self.algorithm_id}")
        lines.append(f"p cnf {self.n} {self.m}")
        lines.extend(" ".join(map(str, c)) + " 0" for c in self.clauses)
        return "\n".join(lines) + "\n"


def evaluate(instance: KSatInstance, x: PartialAssignment, eager: bool = False) -> Verdict:
    """Tri-valued k-SAT predicate.

    FALSE when some clause is fully assigned and falsified.  TRUE when every
    clause has a satisfied literal and either ``x`` is complete or ``eager``
    is set.  INDETERMINATE otherwise.  With ``eager=False`` the backtracking
    tree contains every consistent assignment down to depth n, which is the
    tree whose expected size the analysis module computes.
    """
    if x.n != instance.n:
        raise InputError(f"assignment over {x.n} variables, instance has {instance.n}")
    vals = x.values
    for i, v in x.pairs:
        if v >= instance.d:
            raise InputError(f"value {v} for variable {i} outside domain 0..{instance.d - 1}")
    all_sat = True
    for clause in instance.clauses:
        sat = False
        open_ = False
        for lit in clause:
            v = vals.get(abs(lit))
            if v is None:
                open_ = True
            elif (v == 1) == (lit > 0):
                sat = True
                break
        if not sat:
            if not open_:
                return Verdict.FALSE
            all_sat = False
    # a complete x reaching here has every clause satisfied
    if all_sat and (eager or x.is_complete):
        return Verdict.TRUE
    return Verdict.INDETERMINATE


def random_ksat(n: int, k: int, m: int, rng: RngSpec | np.random.Generator | int) -> KSatInstance:
    """Draw ``m`` clauses i.i.d. uniformly from the ``2^k C(n,k)`` allowed clauses."""
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n, got n={n}, k={k}")
    if m < 0:
        raise InputError(f"negative clause count {m}")
    gen = as_generator(rng)
    clauses = []
    for _ in range(m):
        vars_ = np.sort(gen.choice(n, size=k, replace=False)) + 1
        signs = gen.integers(0, 2, size=k)
        clauses.append(tuple(int(v) if s else -int(v) for v, s in zip(vars_, signs)))
    seed = rng.seed if isinstance(rng, RngSpec) else (int(rng) if isinstance(rng, int) else None)
    algo = DEFAULT_ALGORITHM if seed is not None else None
    return KSatInstance(n, k, tuple(clauses), seed, algo)


def expected_solution_count(n: int, k: int, m: int) -> float:
    return 2.0**n * (1.0 - 2.0**-k) ** m


def brute_force_solutions(instance: KSatInstance) -> list[tuple[int, ...]]:
    """All satisfying complete assignments, enumerated over ``2^n`` bit strings."""
    n = instance.n
    grid = (np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    ok = np.ones(len(grid), dtype=bool)
    for clause in instance.clauses:
        cols = np.array([abs(l) - 1 for l in clause])
        want = np.array([1 if l > 0 else 0 for l in clause])
        ok &= (grid[:, cols] == want).any(axis=1)
    return [tuple(int(b) for b in row) for row in grid[ok]]


def parse_dimacs(text: str, k: int | None = None) -> KSatInstance:
    """Parse DIMACS CNF text into a :class:`KSatInstance`.

    All clauses must share one width.  ``k`` fixes the width when the
    formula has no clauses (defaults to 1 then).
    """
    n = m_decl = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    seed = algo = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) >= 5 and parts[1] == "seed" and parts[3] == "algorithm":
                seed, algo = int(parts[2]), parts[4]
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise InputError(f"line {lineno}: malformed problem line {line!r}")
            try:
                n, m_decl = int(parts[2]), int(parts[3])
            except ValueError:
                raise InputError(f"line {lineno}: malformed problem line {line!r}") from None
            continue
        if n is None:
            raise InputError(f"line {lineno}: clause before the 'p cnf' header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise InputError(f"line {lineno}: non-integer token {tok!r}") from None
            if lit == 0:
                if not current:
                    raise InputError(f"line {lineno}: empty clause")
                vars_ = [abs(l) for l in current]
                if len(set(vars_)) != len(vars_):
                    raise InputError(f"line {lineno}: duplicate variable in clause {current}")
                clauses.append(tuple(current))
                current = []
            else:
                if abs(lit) > n:
                    raise InputError(f"line {lineno}: literal {lit} exceeds n={n}")
                current.append(lit)
    if n is None:
        raise InputError("missing 'p cnf' header")
    if current:
        raise InputError(f"unterminated final clause {current}")
    if m_decl != len(clauses):
        raise InputError(f"header declares {m_decl} clauses, found {len(clauses)}")
    widths = sorted({len(c) for c in clauses})
    if len(widths) > 1:
        raise InputError(f"clause width mismatch: widths {widths} (all clauses must share one k)")
    width = widths[0] if widths else (k or 1)
    if k is not None and k != width:
        raise InputError(f"clause width mismatch: clauses have width {width}, expected k={k}")
    return KSatInstance(n, width, tuple(clauses), seed, algo)


def instance_from_clauses(n: int, clauses: Iterable[Sequence[int]]) -> KSatInstance:
    """Convenience constructor inferring ``k`` from the clauses."""
    clauses = [tuple(c) for c in clauses]
    widths = {len(c) for c in clauses}
    if len(widths) > 1:
        raise InputError(f"clause width mismatch: widths {sorted(widths)}")
    return KSatInstance(n, widths.pop() if widths else 1, tuple(clauses))
