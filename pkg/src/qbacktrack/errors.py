"""Exception types shared across the package.

Each class maps onto one CLI exit code (see ``qbacktrack.cli``).
"""


class InputError(ValueError):
    """Malformed input: bad assignment, bad DIMACS text, unknown vertex id."""


class ContractViolation(RuntimeError):
    """A caller-supplied predicate or heuristic broke its contract."""


class ResourceError(RuntimeError):
    """A configured size cap (vertex budget, dense dimension) was exceeded."""


class PromiseViolation(RuntimeError):
    """The unique-marked-vertex promise does not hold."""


class CalibrationError(RuntimeError):
    """No grid value satisfies the calibration constraint."""


class DegenerateOutcome(RuntimeError):
    """Post-selection on an outcome that has zero probability."""
