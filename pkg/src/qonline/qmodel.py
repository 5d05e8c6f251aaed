"""Density matrices, two-outcome measurements, Born probabilities and postselection."""

from __future__ import annotations

import json
from typing import Iterable

import numpy as np

from . import spectra
from .errors import ConsistencyError, ValidationError

POSTSELECT_MIN_PROB = 1e-12


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 stream; identical seeds give identical draws everywhere."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def child_rng(seed: int, *index: int) -> np.random.Generator:
    """Independent stream derived from ``(seed, index...)`` by seed splitting."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.PCG64(ss))


def n_qubits(m: np.ndarray) -> int:
    d = m.shape[0]
    n = d.bit_length() - 1
    if 1 << n != d:
        raise ValidationError(f"dimension {d} is not a power of two")
    return n


def check_density(rho, name: str = "density matrix") -> np.ndarray:
    a = spectra.as_hermitian(rho, name)
    lam = spectra.eigvalsh(a)
    if lam[-1] < -spectra.CLAMP_TOL:
        raise ValidationError(f"{name} is not PSD: smallest eigenvalue {lam[-1]:.3e}")
    tr = float(np.trace(a).real)
    if abs(tr - 1.0) > spectra.TRACE_TOL:
        raise ValidationError(f"{name} has trace {tr!r}, expected 1")
    return a


def check_measurement(e, name: str = "measurement") -> np.ndarray:
    a = spectra.as_hermitian(e, name)
    lam = spectra.eigvalsh(a)
    if lam[-1] < -spectra.CLAMP_TOL or lam[0] > 1.0 + spectra.CLAMP_TOL:
        raise ValidationError(f"{name} spectrum [{lam[-1]:.3e}, {lam[0]:.3e}] not inside [0, 1]")
    return a


def maximally_mixed(n: int) -> np.ndarray:
    d = spectra.check_dim(2**n)
    return np.eye(d, dtype=np.complex128) / d


def basis_projector(n: int, index: int) -> np.ndarray:
    d = spectra.check_dim(2**n)
    p = np.zeros((d, d), dtype=np.complex128)
    p[index, index] = 1.0
    return p


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def born_probability(e, rho) -> float:
    """Acceptance probability ``Tr(E rho)``, clamped to [0, 1] near the boundary."""
    p = spectra.trace_inner(e, rho)
    if p < -1e-9 or p > 1 + 1e-9:
        raise ConsistencyError(f"Born probability {p!r} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def random_density(n: int, rng: np.random.Generator) -> np.ndarray:
    """Normalized Ginibre state ``G G^dagger / Tr(G G^dagger)``."""
    d = spectra.check_dim(2**n)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return spectra.hermitize(rho / np.trace(rho).real)


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (g + g.conj().T)


def random_measurement(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random eigenbasis with i.i.d. uniform eigenvalues in [0, 1]."""
    d = spectra.check_dim(2**n)
    v = spectra.eig_hermitian(random_hermitian(d, rng)).eigenvectors
    u = rng.uniform(0.0, 1.0, size=d)
    return spectra.hermitize((v * u) @ v.conj().T)


def postselect(e, rho) -> tuple[np.ndarray | None, float]:
    """Post-measurement state on acceptance and its probability.

    Returns ``(sqrt(E) rho sqrt(E) / Tr(E rho), Tr(E rho))``.  When the
    acceptance probability is at most 1e-12 the state is ``None`` (the zero
    outcome) and the caller decides what to do.
    """
    p = born_probability(e, rho)
    if p <= POSTSELECT_MIN_PROB:
        return None, p
    k = spectra.sqrtm_psd(e)
    return spectra.hermitize(k @ rho @ k / p), p


def dilation_unitary(e) -> np.ndarray:
    """Unitary on system (x) ancilla mapping |psi>|0> to sqrt(E)|psi>|0> + sqrt(I-E)|psi>|1>."""
    e = check_measurement(e)
    d = e.shape[0]
    s = spectra.sqrtm_psd(e)
    c = spectra.sqrtm_psd(np.eye(d) - e)
    # ancilla-major blocks; S and C commute so this is unitary
    w = np.block([[s, -c], [c, s]])
    perm = np.array([a * d + i for i in range(d) for a in range(2)])
    return w[np.ix_(perm, perm)]


def postselect_dilation(e, rho, uncompute: bool = True) -> tuple[np.ndarray | None, float]:
    """Postselection through an explicit ancilla dilation ``U`` and ``Pi = I (x) |0><0|``.

    With ``uncompute`` the accepted branch is ``U^{-1} Pi U`` applied to
    ``rho (x) |0><0|`` (an orthogonal projector on system and ancilla),
    otherwise just ``Pi U``.  The second form reduces to
    ``sqrt(E) rho sqrt(E) / Tr(E rho)`` for every ``E``; the first one agrees
    with it when ``E`` is a projector and in general equals
    ``S (S rho S + C rho C) S / Tr(E rho)`` with ``S = sqrt(E)``,
    ``C = sqrt(I - E)`` for the ``U`` built by :func:`dilation_unitary`.
    """
    d = rho.shape[0]
    u = dilation_unitary(e)
    anc0 = np.diag([1.0, 0.0]).astype(np.complex128)
    op = np.kron(np.eye(d), anc0) @ u
    if uncompute:
        op = u.conj().T @ op
    joint = op @ np.kron(rho, anc0) @ op.conj().T
    p = born_probability(e, rho)
    if p <= POSTSELECT_MIN_PROB:
        return None, p
    return spectra.hermitize(spectra.partial_trace(joint, [d, 2], [0]) / p), p


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        d = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float) if "im" in obj else np.zeros_like(re)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix object: {exc}") from None
    if re.shape != (d, d) or im.shape != (d, d):
        raise ValidationError(f"matrix entries have shapes {re.shape}/{im.shape}, expected ({d}, {d})")
    return re + 1j * im


def dump_matrices(matrices: Iterable[np.ndarray]) -> str:
    return json.dumps([matrix_to_json(m) for m in matrices])


def load_matrices(text: str) -> list[np.ndarray]:
    return [matrix_from_json(o) for o in json.loads(text)]
