import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qonline import qmodel, spectra
from qonline.errors import CapacityError, ConsistencyError, ValidationError

P0 = np.diag([1.0, 0.0]).astype(complex)


def test_born_examples():
    rng = qmodel.make_rng(0)
    rho = qmodel.random_density(2, rng)
    assert qmodel.born_probability(np.eye(4), rho) == pytest.approx(1.0)
    assert qmodel.born_probability(P0, np.eye(2) / 2) == pytest.approx(0.5)


def test_born_against_double_sum():
    rng = qmodel.make_rng(1)
    e, rho = qmodel.random_measurement(2, rng), qmodel.random_density(2, rng)
    oracle = sum(e[i, j] * rho[j, i] for i in range(4) for j in range(4))
    assert qmodel.born_probability(e, rho) == pytest.approx(oracle.real, abs=1e-14)


def test_born_clamps_roundoff_and_rejects_violation():
    assert qmodel.born_probability(np.eye(2) * (1 + 1e-10), np.eye(2) / 2) == 1.0
    with pytest.raises(ConsistencyError):
        qmodel.born_probability(2 * np.eye(2), np.eye(2) / 2)


def test_random_density_invariants():
    rng = qmodel.make_rng(2)
    for i in range(1000):
        rho = qmodel.random_density(i % 3 + 1, rng)
        qmodel.check_density(rho)
        assert spectra.eigvalsh(rho)[-1] > 0


def test_random_density_is_deterministic():
    a = qmodel.random_density(3, qmodel.make_rng(42))
    b = qmodel.random_density(3, qmodel.make_rng(42))
    assert np.array_equal(a, b)


def test_random_density_mean_is_maximally_mixed():
    rng = qmodel.make_rng(3)
    mean = sum(qmodel.random_density(1, rng) for _ in range(10000)) / 10000
    assert np.abs(mean - np.eye(2) / 2).max() < 0.02


def test_random_density_capacity(monkeypatch):
    monkeypatch.setenv("QONLINE_DIM_CAP", "4")
    with pytest.raises(CapacityError):
        qmodel.random_density(3, qmodel.make_rng(0))


def test_random_measurement_spectrum_and_determinism():
    rng = qmodel.make_rng(4)
    for i in range(1000):
        lam = spectra.eigvalsh(qmodel.random_measurement(i % 3 + 1, rng))
        assert lam[-1] >= -1e-12 and lam[0] <= 1 + 1e-12
    a = qmodel.random_measurement(2, qmodel.make_rng(9))
    b = qmodel.random_measurement(2, qmodel.make_rng(9))
    assert np.array_equal(a, b)


def test_random_measurement_mixed_state_probability_is_mean_eigenvalue():
    rng = qmodel.make_rng(5)
    e = qmodel.random_measurement(3, rng)
    u = spectra.eigvalsh(e)
    assert qmodel.born_probability(e, qmodel.maximally_mixed(3)) == pytest.approx(u.mean(), abs=1e-12)
    assert np.trace(e).real / 8 == pytest.approx(u.mean(), abs=1e-12)


def test_child_streams_are_independent_and_reproducible():
    a = qmodel.child_rng(7, 0).random(4)
    b = qmodel.child_rng(7, 1).random(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, qmodel.child_rng(7, 0).random(4))
    assert not np.array_equal(a, qmodel.make_rng(7).random(4))


# --- postselection ----------------------------------------------------------

def test_postselect_identity():
    rho = qmodel.random_density(1, qmodel.make_rng(6))
    out, p = qmodel.postselect(np.eye(2), rho)
    np.testing.assert_allclose(out, rho, atol=1e-14)
    assert p == pytest.approx(1.0)


def test_postselect_eigenstate():
    out, p = qmodel.postselect(P0, P0)
    np.testing.assert_allclose(out, P0, atol=1e-15)
    assert p == pytest.approx(1.0)


def test_postselect_projector_on_mixed():
    out, p = qmodel.postselect(P0, np.eye(2) / 2)
    np.testing.assert_allclose(out, P0, atol=1e-15)
    assert p == pytest.approx(0.5)


def test_postselect_zero_outcome():
    out, p = qmodel.postselect(P0, np.diag([0.0, 1.0]))
    assert out is None
    assert p == 0.0


@pytest.mark.parametrize("seed", range(20))
def test_postselect_matches_dilation_without_uncompute(seed):
    rng = qmodel.make_rng(100 + seed)
    e, rho = qmodel.random_measurement(1, rng), qmodel.random_density(1, rng)
    u = qmodel.dilation_unitary(e)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
    kraus, p = qmodel.postselect(e, rho)
    dil, p2 = qmodel.postselect_dilation(e, rho, uncompute=False)
    assert p == pytest.approx(p2)
    np.testing.assert_allclose(kraus, dil, atol=1e-12)


def test_dilation_maps_zero_ancilla_as_specified():
    rng = qmodel.make_rng(7)
    e = qmodel.random_measurement(1, rng)
    u = qmodel.dilation_unitary(e)
    psi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    s, c = spectra.sqrtm_psd(e), spectra.sqrtm_psd(np.eye(2) - e)
    expected = np.kron(s @ psi, [1, 0]) + np.kron(c @ psi, [0, 1])
    np.testing.assert_allclose(u @ np.kron(psi, [1, 0]), expected, atol=1e-12)


@pytest.mark.parametrize("index", [0, 1])
def test_uncomputed_dilation_equals_kraus_for_projectors(index):
    rng = qmodel.make_rng(11)
    v = spectra.eig_hermitian(qmodel.random_hermitian(2, rng)).eigenvectors
    e = np.outer(v[:, index], v[:, index].conj())
    rho = qmodel.random_density(1, rng)
    np.testing.assert_allclose(qmodel.postselect_dilation(e, rho)[0], qmodel.postselect(e, rho)[0], atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_uncomputed_dilation_closed_form(seed):
    # U^{-1} Pi U leaves the extra term S C rho C S for non-projective E
    rng = qmodel.make_rng(200 + seed)
    e, rho = qmodel.random_measurement(1, rng), qmodel.random_density(1, rng)
    s, c = spectra.sqrtm_psd(e), spectra.sqrtm_psd(np.eye(2) - e)
    p = qmodel.born_probability(e, rho)
    out, p2 = qmodel.postselect_dilation(e, rho)
    assert p2 == pytest.approx(p)
    np.testing.assert_allclose(out, s @ (s @ rho @ s + c @ rho @ c) @ s / p, atol=1e-12)
    qmodel.check_density(out)


def test_postselect_dilation_two_qubits():
    rng = qmodel.make_rng(8)
    e, rho = qmodel.random_measurement(2, rng), qmodel.random_density(2, rng)
    np.testing.assert_allclose(qmodel.postselect(e, rho)[0],
                               qmodel.postselect_dilation(e, rho, uncompute=False)[0], atol=1e-12)


# --- serialization ----------------------------------------------------------

def test_json_roundtrip_is_exact():
    rng = qmodel.make_rng(10)
    ms = [qmodel.random_density(2, rng), qmodel.random_measurement(1, rng)]
    back = qmodel.load_matrices(qmodel.dump_matrices(ms))
    for a, b in zip(ms, back):
        assert np.array_equal(a, b)


def test_json_malformed():
    with pytest.raises(ValidationError):
        qmodel.matrix_from_json({"dim": 2, "re": [[1, 0]]})
    with pytest.raises(ValidationError):
        qmodel.matrix_from_json({"re": [[1]]})


def test_check_density_rejects():
    with pytest.raises(ValidationError, match="trace"):
        qmodel.check_density(np.eye(2))
    with pytest.raises(ValidationError, match="PSD"):
        qmodel.check_density(np.diag([1.5, -0.5]))


def test_n_qubits():
    assert qmodel.n_qubits(np.eye(8)) == 3
    with pytest.raises(ValidationError):
        qmodel.n_qubits(np.eye(3))


# --- properties -------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)
qubits = st.integers(1, 3)


@settings(max_examples=50, deadline=None)
@given(seeds, qubits)
def test_postselect_output_and_branch_trace(seed, n):
    rng = qmodel.make_rng(seed)
    e, rho = qmodel.random_measurement(n, rng), qmodel.random_density(n, rng)
    k = spectra.sqrtm_psd(e)
    assert np.trace(k @ rho @ k).real == pytest.approx(spectra.trace_inner(e, rho), abs=1e-10)
    out, p = qmodel.postselect(e, rho)
    qmodel.check_density(out)


@settings(max_examples=50, deadline=None)
@given(seeds, qubits)
def test_complement_probabilities_sum_to_one(seed, n):
    rng = qmodel.make_rng(seed)
    e, rho = qmodel.random_measurement(n, rng), qmodel.random_density(n, rng)
    d = 2**n
    total = qmodel.born_probability(e, rho) + qmodel.born_probability(np.eye(d) - e, rho)
    assert total == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(seeds, qubits, st.floats(0, 1))
def test_born_probability_is_affine(seed, n, alpha):
    rng = qmodel.make_rng(seed)
    e = qmodel.random_measurement(n, rng)
    r1, r2 = qmodel.random_density(n, rng), qmodel.random_density(n, rng)
    lhs = qmodel.born_probability(e, alpha * r1 + (1 - alpha) * r2)
    rhs = alpha * qmodel.born_probability(e, r1) + (1 - alpha) * qmodel.born_probability(e, r2)
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_pure_state_and_projectors():
    psi = np.array([1.0, 1j]) / math.sqrt(2)
    rho = qmodel.pure_state(psi)
    assert spectra.von_neumann_entropy(rho) == pytest.approx(0.0, abs=1e-12)
    assert qmodel.born_probability(qmodel.basis_projector(1, 1), rho) == pytest.approx(0.5)
