"""Spectrum of the walk step and the phase-estimation acceptance model.

Eigenvalues of U = R_B R_A are written e^{2i theta} with theta in
(-pi/2, pi/2].  Phase estimation with s ancillas leaves eigenvector k with
amplitude

    mu_k = 2^-s * sum_{j < 2^s} e^{2 i j theta_k}

on the all-zeros ancilla outcome, so acceptance and post-selected states
follow from the eigen-expansion of the input.  :func:`qpe_statevector`
simulates the circuit itself and is the independent check on that model.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DegenerateOutcome, InputError, ResourceError
from .walk import WalkOperators, eta_vector, phi_perp, xi_witness

RESIDUAL_TOL = 1e-9
# phases this close to 0 are the invariant subspace; true nonzero phases
# of trees up to the dense threshold are >= 1/sqrt(Tn) >> this
ZERO_PHASE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    phases: np.ndarray
    vectors: np.ndarray
    residual: float

    @property
    def T(self) -> int:
        return len(self.phases)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.exp(2j * self.phases)

    def coefficients(self, v: np.ndarray) -> np.ndarray:
        """Expansion coefficients <psi_k|v>."""
        return self.vectors.conj().T @ v

    def spectrum_csv(self, v: np.ndarray | None = None) -> str:
        """Rows ``theta,weight`` with weight = |<v|psi_k>|^2 (v defaults to |r>)."""
        if v is None:
            v = np.zeros(self.T)
            v[0] = 1.0
        w = np.abs(self.coefficients(v)) ** 2
        buf = io.StringIO()
        buf.write("theta,weight\n")
        for t, x in sorted(zip(self.phases, w)):
            buf.write(f"{t:.17g},{x:.17g}\n")
        return buf.getvalue()


def _reduce_phases(eigvals: np.ndarray) -> np.ndarray:
    theta = np.angle(eigvals) / 2
    theta[np.abs(theta) < ZERO_PHASE_TOL] = 0.0
    theta[theta <= -math.pi / 2 + 1e-12] = math.pi / 2
    return theta


def eigendecompose(walk: WalkOperators) -> EigenDecomposition:
    """Orthonormal eigenbasis of R_B R_A via the complex Schur form.

    U is real orthogonal, hence normal, so its Schur form is diagonal and the
    Schur vectors are an orthonormal eigenbasis even inside degenerate
    eigenspaces.
    """
    if walk.T > walk.max_dim:
        raise ResourceError(
            f"T={walk.T} exceeds the dense threshold {walk.max_dim}; "
            "use statevector-style application via WalkOperators.step"
        )
    U = walk.dense_step()
    tri, Z = scipy.linalg.schur(U.astype(complex), output="complex")
    eigvals = np.diag(tri).copy()
    residual = float(np.linalg.norm(U @ Z - Z * eigvals, axis=0).max()) if walk.T else 0.0
    if residual > RESIDUAL_TOL:
        raise RuntimeError(f"eigendecomposition residual {residual:.3g} above {RESIDUAL_TOL}")
    return EigenDecomposition(_reduce_phases(eigvals), Z, residual)


def projector_norm(decomp: EigenDecomposition, v: np.ndarray, chi: float) -> float:
    """Norm of the projection of ``v`` onto eigenvectors with |theta| <= chi."""
    if chi < 0:
        raise InputError(f"chi must be non-negative, got {chi}")
    c = decomp.coefficients(v)
    sel = np.abs(decomp.phases) <= chi
    return float(np.sqrt(np.sum(np.abs(c[sel]) ** 2)))


def qpe_amplitude(theta: np.ndarray | float, s: int) -> np.ndarray:
    """Coherent all-zeros amplitude for eigenphase ``theta`` with ``s`` ancillas."""
    theta = np.asarray(theta, dtype=float)
    N = 2**s
    sin_t = np.sin(theta)
    small = np.abs(sin_t) < 1e-15
    safe = np.where(small, 1.0, sin_t)
    mu = np.exp(1j * theta * (N - 1)) * np.sin(N * theta) / (N * safe)
    return np.where(small, 1.0 + 0j, mu)


def qpe_accept_weight(theta: np.ndarray | float, s: int) -> np.ndarray:
    """|mu|^2 = sin^2(2^s theta) / (2^{2s} sin^2 theta), equal to 1 at theta = 0."""
    return np.abs(qpe_amplitude(theta, s)) ** 2


def _check_normalized(v: np.ndarray):
    nrm = np.linalg.norm(v)
    if abs(nrm - 1) > 1e-9:
        raise InputError(f"input state has norm {nrm:.12g}, expected 1")


def qpe_accept_probability(decomp: EigenDecomposition, v: np.ndarray, s: int) -> float:
    """Exact probability that phase estimation reports the all-zeros outcome."""
    _check_normalized(v)
    lam2 = np.abs(decomp.coefficients(v)) ** 2
    return float(min(1.0, np.sum(lam2 * qpe_accept_weight(decomp.phases, s))))


def qpe_conditional_state(decomp: EigenDecomposition, v: np.ndarray, s: int) -> tuple[float, np.ndarray]:
    """Acceptance probability and the post-selected vertex-register state."""
    _check_normalized(v)
    amp = decomp.vectors @ (decomp.coefficients(v) * qpe_amplitude(decomp.phases, s))
    p = float(np.vdot(amp, amp).real)
    # sin(2^s theta) at theta = pi/2 leaves ~1e-33 of roundoff
    if p <= 1e-20:
        raise DegenerateOutcome("all-zeros ancilla outcome has zero probability")
    return min(p, 1.0), amp / math.sqrt(p)


# --- explicit circuit simulation -------------------------------------------

def _apply_1q(state: np.ndarray, gate: np.ndarray, q: int, s: int) -> np.ndarray:
    # ancilla index j = sum_b j_b 2^b; qubit q is bit q
    T = state.shape[1]
    view = state.reshape(2 ** (s - q - 1), 2, 2**q, T)
    return np.einsum("ab,xbyt->xayt", gate, view).reshape(2**s, T)


def _apply_cphase(state: np.ndarray, angle: float, q1: int, q2: int, s: int) -> np.ndarray:
    j = np.arange(2**s)
    both = ((j >> q1) & 1) & ((j >> q2) & 1)
    return state * np.where(both, np.exp(1j * angle), 1.0)[:, None]


def _swap_qubits(state: np.ndarray, q1: int, q2: int, s: int) -> np.ndarray:
    j = np.arange(2**s)
    b1, b2 = (j >> q1) & 1, (j >> q2) & 1
    perm = j ^ ((b1 ^ b2) << q1) ^ ((b1 ^ b2) << q2)
    return state[perm]


def qft_gates(s: int) -> list[tuple]:
    """Gate list for the QFT |j> -> 2^{-s/2} sum_k e^{2 pi i jk / 2^s} |k>."""
    gates: list[tuple] = []
    for q in range(s - 1, -1, -1):
        gates.append(("h", q))
        for p in range(q - 1, -1, -1):
            gates.append(("cp", math.pi / 2 ** (q - p), p, q))
    for q in range(s // 2):
        gates.append(("swap", q, s - 1 - q))
    return gates


_H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def apply_gates(state: np.ndarray, gates: list[tuple], s: int, inverse: bool = False) -> np.ndarray:
    seq = reversed(gates) if inverse else gates
    for g in seq:
        if g[0] == "h":
            state = _apply_1q(state, _H, g[1], s)
        elif g[0] == "cp":
            state = _apply_cphase(state, -g[1] if inverse else g[1], g[2], g[3], s)
        else:
            state = _swap_qubits(state, g[1], g[2], s)
    return state


def qpe_statevector(U: np.ndarray, v: np.ndarray, s: int) -> tuple[float, np.ndarray]:
    """Simulate phase estimation gate by gate on the (2^s * T)-dim space.

    Hadamards on every ancilla, controlled U^(2^q) from ancilla q, inverse
    QFT on the ancillas.  Returns the all-zeros probability and the
    (unnormalized) vertex-register amplitude on that outcome.
    """
    T = len(v)
    state = np.zeros((2**s, T), dtype=complex)
    state[0] = v
    for q in range(s):
        state = _apply_1q(state, _H, q, s)
    power = U.astype(complex)
    j = np.arange(2**s)
    for q in range(s):
        ctrl = ((j >> q) & 1).astype(bool)
        state[ctrl] = state[ctrl] @ power.T
        power = power @ power
    state = apply_gates(state, qft_gates(s), s, inverse=True)
    amp = state[0]
    return float(np.vdot(amp, amp).real), amp


# --- spectral property checks --------------------------------------------

DEFAULT_CHI_GRID = (0.0, 1e-3, 1e-2, 1e-1, 1.0)


@dataclass
class GapReport:
    checks: int = 0
    violations: int = 0
    max_excess: float = -math.inf
    failures: list = field(default_factory=list)

    def record(self, lhs: float, rhs: float, tag):
        self.checks += 1
        self.max_excess = max(self.max_excess, lhs - rhs)
        if lhs > rhs + 1e-8:
            self.violations += 1
            self.failures.append((tag, lhs, rhs))


def verify_effective_gap(walk: WalkOperators, trials: int, rng: np.random.Generator,
                         chis=DEFAULT_CHI_GRID, decomp: EigenDecomposition | None = None,
                         report: GapReport | None = None) -> GapReport:
    """Check ||P_chi Pi_B psi|| <= chi ||psi|| for random psi with Pi_A psi = 0.

    Random psi are drawn as (I - Pi_A) g for Gaussian g.  On trees without
    marked vertices the vector eta is checked as well.
    """
    decomp = decomp or eigendecompose(walk)
    report = report or GapReport()
    vectors = []
    for _ in range(trials):
        g = rng.standard_normal(walk.T)
        vectors.append(("random", g - walk.project_A(g)))
    if not walk.tree.marked.any():
        vectors.append(("eta", eta_vector(walk).coeffs))
    for tag, psi in vectors:
        nrm = np.linalg.norm(psi)
        pb = walk.project_B(psi)
        for chi in chis:
            report.record(projector_norm(decomp, pb, chi), chi * nrm, (tag, chi))
    return report


@dataclass
class WitnessDecayReport:
    eps: np.ndarray
    ratios: np.ndarray
    xi_norm: float
    xi_excess: float

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max())


def verify_witness_decay(walk: WalkOperators, target: int, eps_grid=None,
                  decomp: EigenDecomposition | None = None) -> WitnessDecayReport:
    """Ratios ||P_eps phi_perp|| / (eps sqrt(Tn)) over ``eps_grid``.

    Also returns the largest excess of ||P_eps phi_perp|| over eps ||xi||,
    which the witness construction says is never positive.
    """
    xi = xi_witness(walk, target)
    eps = np.asarray(np.logspace(-4, -1, 13) if eps_grid is None else eps_grid, dtype=float)
    decomp = decomp or eigendecompose(walk)
    pp = phi_perp(walk, target).coeffs
    norms = np.array([projector_norm(decomp, pp, e) for e in eps])
    scale = math.sqrt(walk.T * walk.n)
    return WitnessDecayReport(eps, norms / (eps * scale), xi.norm, float(np.max(norms - eps * xi.norm)))
