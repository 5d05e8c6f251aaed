import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qonline import spectra
from qonline.errors import CapacityError, ConsistencyError, DomainError, ValidationError
from qonline.qmodel import random_density, random_hermitian

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def _rand_herm(d, rng):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def _rand_psd(d, rng):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return g @ g.conj().T


def _rand_density(d, rng):
    m = _rand_psd(d, rng)
    return m / np.trace(m).real


# --- eigendecomposition ---------------------------------------------------

def test_eig_identity():
    dec = spectra.eig_hermitian(np.eye(2))
    np.testing.assert_allclose(dec.eigenvalues, [1.0, 1.0])


def test_eig_pauli_z():
    dec = spectra.eig_hermitian(Z)
    np.testing.assert_allclose(dec.eigenvalues, [1.0, -1.0])
    np.testing.assert_allclose(np.abs(dec.eigenvectors), np.eye(2), atol=1e-14)


@pytest.mark.parametrize("d", [1, 2, 3, 5, 8, 16])
def test_eig_reconstruction_and_orthonormality(d):
    rng = np.random.default_rng(d)
    h = _rand_herm(d, rng)
    dec = spectra.eig_hermitian(h)
    assert np.linalg.norm(dec.reconstruct() - h) < 1e-9 * d
    v = dec.eigenvectors
    assert np.abs(v.conj().T @ v - np.eye(d)).max() < 1e-10
    assert np.all(np.diff(dec.eigenvalues) <= 0)
    # LAPACK as an independent oracle for the spectrum
    np.testing.assert_allclose(dec.eigenvalues, np.linalg.eigvalsh(h)[::-1], atol=1e-11)


def test_eig_degenerate_spectrum_reconstructs():
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
    h = q @ np.diag([2.0, 2.0, 2.0, -1.0, -1.0, 0.5]) @ q.conj().T
    dec = spectra.eig_hermitian(h)
    np.testing.assert_allclose(dec.eigenvalues, [2, 2, 2, 0.5, -1, -1], atol=1e-12)
    assert np.linalg.norm(dec.reconstruct() - h) < 1e-10


def test_eig_is_deterministic():
    h = _rand_herm(8, np.random.default_rng(3))
    a, b = spectra.eig_hermitian(h), spectra.eig_hermitian(h.copy())
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_eigvalsh_matches_full_decomposition():
    h = _rand_herm(7, np.random.default_rng(4))
    np.testing.assert_allclose(spectra.eigvalsh(h), spectra.eig_hermitian(h).eigenvalues, atol=1e-13)


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError, match="Hermitian"):
        spectra.eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


def test_eig_rejects_non_square():
    with pytest.raises(ValidationError, match="square"):
        spectra.eig_hermitian(np.zeros((2, 3)))


# --- spectral functions ---------------------------------------------------

def test_exp_zero_is_identity():
    np.testing.assert_allclose(spectra.expm_h(np.zeros((2, 2))), np.eye(2), atol=1e-15)


def test_exp_diagonal():
    np.testing.assert_allclose(spectra.expm_h(np.diag([1.0, -1.0])), np.diag([math.e, 1 / math.e]), atol=1e-14)


def test_exp_pauli_x_against_power_series():
    theta = 0.5
    a = theta * X
    series, term = np.eye(2, dtype=complex), np.eye(2, dtype=complex)
    for j in range(1, 30):
        term = term @ a / j
        series = series + term
    np.testing.assert_allclose(spectra.expm_h(a), series, atol=1e-14)
    np.testing.assert_allclose(series, math.cosh(theta) * np.eye(2) + math.sinh(theta) * X, atol=1e-14)


def test_log_inverts_exp():
    h = _rand_herm(4, np.random.default_rng(5))
    np.testing.assert_allclose(spectra.logm_pd(spectra.expm_h(h)), h, atol=1e-10)


def test_log_of_singular_matrix_is_domain_error():
    with pytest.raises(DomainError):
        spectra.logm_pd(np.diag([1.0, 0.0]))


def test_spectral_function_rejects_negative_sqrt():
    with pytest.raises(DomainError):
        spectra.spectral_function(np.diag([1.0, -1.0]), np.sqrt)


def test_sqrtm_squares_back():
    p = _rand_psd(5, np.random.default_rng(6))
    r = spectra.sqrtm_psd(p)
    np.testing.assert_allclose(r @ r, p, atol=1e-10)


def test_gibbs_state_is_density_and_shift_invariant():
    h = 50 * _rand_herm(4, np.random.default_rng(7))
    g = spectra.gibbs_state(h)
    assert abs(np.trace(g) - 1) < 1e-12
    assert spectra.eigvalsh(g).min() >= -1e-15
    np.testing.assert_allclose(spectra.gibbs_state(h + 1000 * np.eye(4)), g, atol=1e-12)


# --- norms ----------------------------------------------------------------

def test_trace_norm_examples():
    assert spectra.trace_norm(np.eye(4)) == pytest.approx(4.0)
    assert spectra.trace_norm(Z) == pytest.approx(2.0)
    h = _rand_herm(6, np.random.default_rng(8))
    assert spectra.trace_norm(h) == pytest.approx(np.abs(np.linalg.eigvalsh(h)).sum(), abs=1e-11)


def test_spectral_norm_examples():
    assert spectra.spectral_norm(np.eye(3)) == pytest.approx(1.0)
    assert spectra.spectral_norm(np.diag([0.3, -0.9])) == pytest.approx(0.9)
    h = _rand_herm(5, np.random.default_rng(9))
    assert spectra.spectral_norm(h) == pytest.approx(np.linalg.norm(h, 2), abs=1e-11)


# --- tensor and partial trace --------------------------------------------

def test_tensor_examples():
    np.testing.assert_array_equal(spectra.tensor(np.eye(2), np.eye(2)), np.eye(4))
    p0 = np.diag([1.0, 0.0])
    np.testing.assert_array_equal(spectra.tensor(p0, p0), np.diag([1.0, 0, 0, 0]))


def test_tensor_index_layout_and_trace():
    rng = np.random.default_rng(10)
    a, b = _rand_herm(2, rng), _rand_herm(3, rng)
    t = spectra.tensor(a, b)
    for i, j, p, q in np.ndindex(2, 2, 3, 3):
        assert t[i * 3 + p, j * 3 + q] == pytest.approx(a[i, j] * b[p, q], abs=1e-15)
    direct = sum(a[i, i] * b[p, p] for i in range(2) for p in range(3))
    assert np.trace(t) == pytest.approx(direct)


def test_tensor_capacity(monkeypatch):
    monkeypatch.setenv("QONLINE_DIM_CAP", "8")
    with pytest.raises(CapacityError):
        spectra.tensor(np.eye(4), np.eye(4))
    spectra.tensor(np.eye(4), np.eye(2))


def test_partial_trace_product_state():
    rho = np.diag([0.7, 0.3])
    out = spectra.partial_trace(spectra.tensor(rho, np.eye(2) / 2), [2, 2], [0])
    np.testing.assert_allclose(out, rho, atol=1e-15)


def test_partial_trace_maximally_mixed():
    np.testing.assert_allclose(spectra.partial_trace(np.eye(4) / 4, [2, 2], [0]), np.eye(2) / 2)


def test_partial_trace_bell_state_against_index_sum():
    phi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    bell = np.outer(phi, phi)
    oracle = np.zeros((2, 2))
    for i, j, k in np.ndindex(2, 2, 2):
        oracle[i, j] += bell[2 * i + k, 2 * j + k]
    np.testing.assert_allclose(oracle, np.eye(2) / 2)
    np.testing.assert_allclose(spectra.partial_trace(bell, [2, 2], [0]), oracle, atol=1e-15)


def test_partial_trace_middle_factor():
    rng = np.random.default_rng(11)
    a, b, c = (_rand_density(d, rng) for d in (2, 3, 2))
    m = np.kron(np.kron(a, b), c)
    np.testing.assert_allclose(spectra.partial_trace(m, [2, 3, 2], [1]), b, atol=1e-14)
    np.testing.assert_allclose(spectra.partial_trace(m, [2, 3, 2], [0, 2]), np.kron(a, c), atol=1e-14)


def test_partial_trace_dimension_mismatch():
    with pytest.raises(ValidationError):
        spectra.partial_trace(np.eye(4), [2, 3], [0])
    with pytest.raises(ValidationError):
        spectra.partial_trace(np.eye(4), [2, 2], [])


# --- entropies ------------------------------------------------------------

def test_entropy_examples():
    assert spectra.von_neumann_entropy(np.diag([1.0, 0.0])) == pytest.approx(0.0, abs=1e-15)
    assert spectra.von_neumann_entropy(np.eye(8) / 8) == pytest.approx(3 * math.log(2))
    assert spectra.von_neumann_entropy(np.eye(8) / 8) == pytest.approx(2.0794, abs=1e-4)
    expected = -0.25 * math.log(0.25) - 0.75 * math.log(0.75)
    assert spectra.von_neumann_entropy(np.diag([0.25, 0.75])) == pytest.approx(expected)
    assert expected == pytest.approx(0.5623, abs=1e-4)


def test_entropy_clamps_roundoff_and_rejects_negative():
    assert spectra.von_neumann_entropy(np.diag([1.0 + 5e-11, -5e-11])) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(DomainError):
        spectra.von_neumann_entropy(np.diag([1.1, -0.1]))


def test_relative_entropy_examples():
    rho = _rand_density(4, np.random.default_rng(12))
    assert spectra.relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)
    assert spectra.relative_entropy(np.diag([1.0, 0.0]), np.eye(2) / 2) == pytest.approx(math.log(2))


def test_relative_entropy_singular_sigma():
    with pytest.raises(DomainError):
        spectra.relative_entropy(np.eye(2) / 2, np.diag([1.0, 0.0]))


def test_pinsker_on_100_pairs():
    rng = np.random.default_rng(13)
    for _ in range(100):
        d = int(rng.choice([2, 4]))
        rho, sigma = _rand_density(d, rng), _rand_density(d, rng)
        lhs = 0.5 * spectra.trace_norm(rho - sigma) ** 2
        assert lhs <= spectra.relative_entropy(rho, sigma) + 1e-9


def test_binary_entropy():
    assert spectra.binary_entropy(0.5) == pytest.approx(1.0)
    assert spectra.binary_entropy(0.0) == 0.0
    assert spectra.binary_entropy(0.11) == pytest.approx(-(0.11 * math.log2(0.11) + 0.89 * math.log2(0.89)))


# --- trace inner product ----------------------------------------------------

def test_trace_inner_examples():
    rho = _rand_density(3, np.random.default_rng(14))
    assert spectra.trace_inner(np.eye(3), rho) == pytest.approx(1.0)
    assert spectra.trace_inner(np.diag([1.0, 0.0]), np.eye(2) / 2) == pytest.approx(0.5)


def test_trace_inner_rejects_complex_result():
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    b = np.array([[0, 0], [1j, 0]])
    with pytest.raises(ConsistencyError):
        spectra.trace_inner(a, b)


def test_generalized_cauchy_schwarz_examples():
    rng = np.random.default_rng(15)
    for _ in range(50):
        a, b = _rand_herm(4, rng), _rand_herm(4, rng)
        assert abs(spectra.trace_inner(a, b)) <= spectra.spectral_norm(a) * spectra.trace_norm(b) + 1e-9


# --- properties -------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)
dims = st.sampled_from([2, 4, 8])


@settings(max_examples=60, deadline=None)
@given(seeds, dims)
def test_monotonicity_property(seed, d):
    rng = np.random.default_rng(seed)
    b = _rand_herm(d, rng)
    a = b + _rand_psd(d, rng)
    x = _rand_psd(d, rng)
    assert spectra.trace_inner(a, x) >= spectra.trace_inner(b, x) - 1e-9


@settings(max_examples=60, deadline=None)
@given(seeds, dims)
def test_realness_property(seed, d):
    rng = np.random.default_rng(seed)
    a, b = _rand_herm(d, rng), _rand_herm(d, rng)
    assert abs(np.trace(a @ b).imag) < 1e-10


@settings(max_examples=60, deadline=None)
@given(seeds, dims)
def test_partial_trace_preserves_trace_and_positivity(seed, d):
    rng = np.random.default_rng(seed)
    m = _rand_psd(2 * d, rng)
    out = spectra.partial_trace(m, [2, d], [1])
    assert np.trace(out).real == pytest.approx(np.trace(m).real, rel=1e-12)
    assert spectra.eigvalsh(out).min() >= -1e-10 * np.trace(m).real


@settings(max_examples=40, deadline=None)
@given(seeds, dims)
def test_qmodel_generators_feed_spectra(seed, d):
    rng = np.random.default_rng(seed)
    n = int(math.log2(d))
    rho = random_density(n, rng)
    h = random_hermitian(d, rng)
    assert abs(spectra.trace_inner(h, rho)) <= spectra.spectral_norm(h) + 1e-9
