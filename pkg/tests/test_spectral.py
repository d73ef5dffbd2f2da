import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbacktrack.backtrack import BacktrackTree
from qbacktrack.errors import DegenerateOutcome, InputError, ResourceError
from qbacktrack.spectral import (EigenDecomposition, eigendecompose, projector_norm, qft_gates,
                                 apply_gates, qpe_accept_probability, qpe_accept_weight,
                                 qpe_amplitude, qpe_conditional_state, qpe_statevector,
                                 verify_effective_gap, verify_witness_decay)
from qbacktrack.suite import complete_tree, random_recursive_tree
from qbacktrack.walk import build_walk, phi_normalized, phi_perp, phi_vector


def marked_path(length=4):
    marked = [False] * length + [True]
    return BacktrackTree.from_parents([-1] + list(range(length)), marked=marked)


def test_single_vertex_phase():
    dc = eigendecompose(build_walk(BacktrackTree.from_parents([-1])))
    assert dc.phases.tolist() == [math.pi / 2]


def test_marked_tree_has_zero_phase_overlapping_phi():
    w = build_walk(marked_path())
    dc = eigendecompose(w)
    phi = phi_vector(w, 4)
    zero = dc.phases == 0
    assert zero.any()
    assert projector_norm(dc, phi.coeffs, 0.0) == pytest.approx(phi.norm, rel=1e-10)


def test_phases_closed_under_negation(rng):
    t = random_recursive_tree(60, rng)
    dc = eigendecompose(build_walk(t))
    inner = np.sort(dc.phases[np.abs(dc.phases) < math.pi / 2 - 1e-9])
    assert np.allclose(inner, -inner[::-1], atol=1e-9)


def test_eigendecomposition_residual_and_unitarity(rng):
    w = build_walk(random_recursive_tree(80, rng))
    dc = eigendecompose(w)
    assert dc.residual <= 1e-9
    assert np.allclose(dc.vectors.conj().T @ dc.vectors, np.eye(w.T), atol=1e-10)
    assert np.all(dc.phases > -math.pi / 2) and np.all(dc.phases <= math.pi / 2)


def test_dense_threshold():
    with pytest.raises(ResourceError):
        eigendecompose(build_walk(complete_tree(4), max_dim=8))


def test_projector_norm_full_space(rng):
    w = build_walk(random_recursive_tree(30, rng))
    dc = eigendecompose(w)
    v = rng.standard_normal(w.T)
    assert projector_norm(dc, v, math.pi / 2) == pytest.approx(np.linalg.norm(v))
    with pytest.raises(InputError):
        projector_norm(dc, v, -0.1)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), T=st.integers(1, 60))
def test_parseval(seed, T):
    rng = np.random.default_rng(seed)
    dc = eigendecompose(build_walk(random_recursive_tree(T, rng)))
    v = rng.standard_normal(T)
    assert np.sum(np.abs(dc.coefficients(v)) ** 2) == pytest.approx(v @ v, rel=1e-10)


def test_accept_weight_examples():
    assert qpe_accept_weight(math.pi / 4, 1) == pytest.approx(0.5)
    assert qpe_accept_weight(0.0, 5) == 1.0
    theta = np.linspace(1e-3, 1.5, 50)
    for s in (1, 3, 6):
        direct = np.abs(np.exp(2j * np.outer(np.arange(2**s), theta)).sum(axis=0) / 2**s) ** 2
        assert np.allclose(qpe_accept_weight(theta, s), direct, atol=1e-12)


def test_zero_phase_eigenvector_accepted_with_certainty():
    w = build_walk(marked_path())
    dc = eigendecompose(w)
    phi = phi_normalized(w, 4).coeffs
    assert qpe_accept_probability(dc, phi, 4) == pytest.approx(1.0, abs=1e-12)
    p, state = qpe_conditional_state(dc, phi, 4)
    assert p == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(state, phi, atol=1e-10)


def test_unnormalized_input_rejected():
    dc = eigendecompose(build_walk(marked_path()))
    with pytest.raises(InputError):
        qpe_accept_probability(dc, np.ones(5), 2)


def test_degenerate_outcome():
    # single unmarked vertex: theta = pi/2 and mu = 0 for every s >= 1
    dc = eigendecompose(build_walk(BacktrackTree.from_parents([-1])))
    assert qpe_accept_probability(dc, np.array([1.0]), 3) == pytest.approx(0.0, abs=1e-30)
    with pytest.raises(DegenerateOutcome):
        qpe_conditional_state(dc, np.array([1.0]), 3)


@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_qft_matches_dft(s):
    N = 2**s
    state = np.eye(N, dtype=complex)
    out = apply_gates(state, qft_gates(s), s)
    dft = np.exp(2j * np.pi * np.outer(np.arange(N), np.arange(N)) / N) / math.sqrt(N)
    assert np.allclose(out, dft, atol=1e-12)
    back = apply_gates(out, qft_gates(s), s, inverse=True)
    assert np.allclose(back, state, atol=1e-12)


def test_statevector_matches_model(rng):
    for _ in range(5):
        w = build_walk(random_recursive_tree(int(rng.integers(2, 30)), rng))
        dc = eigendecompose(w)
        v = rng.standard_normal(w.T)
        v /= np.linalg.norm(v)
        for s in (1, 3, 5):
            p_sim, amp = qpe_statevector(w.dense_step(), v, s)
            assert p_sim == pytest.approx(qpe_accept_probability(dc, v, s), abs=1e-10)
            model = dc.vectors @ (dc.coefficients(v) * qpe_amplitude(dc.phases, s))
            assert np.allclose(amp, model, atol=1e-10)


def test_effective_gap_and_witness_decay(suite, rng):
    for st_ in suite["unique"][:20]:
        w = build_walk(st_.tree)
        dc = eigendecompose(w)
        rep = verify_effective_gap(w, 3, rng, decomp=dc)
        assert rep.violations == 0
        l3 = verify_witness_decay(w, st_.tree.marked_ids[0], decomp=dc)
        assert l3.xi_excess <= 1e-8
        assert l3.max_ratio <= 1 / math.sqrt(2) + 1e-8
        pp = phi_perp(w, st_.tree.marked_ids[0]).coeffs
        assert projector_norm(dc, pp, math.pi / 2) == pytest.approx(1.0)


def test_gap_chi_zero():
    w = build_walk(complete_tree(3))
    rep = verify_effective_gap(w, 4, np.random.default_rng(1), chis=(0.0,))
    assert rep.violations == 0 and rep.max_excess <= 1e-8


def test_spectrum_csv():
    dc = eigendecompose(build_walk(marked_path()))
    rows = dc.spectrum_csv().strip().splitlines()
    assert rows[0] == "theta,weight" and len(rows) == 6
    assert sum(float(r.split(",")[1]) for r in rows[1:]) == pytest.approx(1.0)


def test_amplitude_decays_away_from_zero():
    # |mu| = |sin(2^s theta)| / (2^s |sin theta|) <= (pi/2) / (2^s |theta|) on (-pi/2, pi/2]
    theta = np.linspace(-math.pi / 2 + 1e-6, math.pi / 2, 20_001)
    theta = theta[np.abs(theta) > 1e-9]
    for s in range(1, 11):
        fitted = np.max(np.abs(qpe_amplitude(theta, s)) * 2**s * np.abs(theta))
        assert fitted <= math.pi / 2 + 1e-9
