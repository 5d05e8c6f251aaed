"""Dense linear algebra over complex Hermitian matrices.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Every
eigendecomposition in the package goes through :func:`eig_hermitian`, a
cyclic complex Jacobi solver compiled with numba, so results are
deterministic for a fixed input.
"""

from __future__ import annotations

import math
import os
from typing import Callable, NamedTuple, Sequence

import numba
import numpy as np

from .errors import CapacityError, ConsistencyError, ConvergenceError, DomainError, ValidationError

DEFAULT_DIM_CAP = 4096
HERMITIAN_TOL = 1e-12
CLAMP_TOL = 1e-10
TRACE_TOL = 1e-8
JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def dim_cap() -> int:
    """Current dimension cap; ``QONLINE_DIM_CAP`` overrides the default."""
    raw = os.environ.get("QONLINE_DIM_CAP")
    if raw is None:
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValidationError(f"QONLINE_DIM_CAP must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ValidationError(f"QONLINE_DIM_CAP must be positive, got {cap}")
    return cap


def check_dim(dim: int) -> int:
    cap = dim_cap()
    if dim > cap:
        raise CapacityError(f"dimension {dim} exceeds the cap {cap}")
    return dim


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # real, descending
    eigenvectors: np.ndarray  # unitary, eigenvectors as columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_hermitian(m, name: str = "matrix") -> np.ndarray:
    """Validate ``m`` as a square Hermitian matrix and return it as complex128."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ValidationError(f"{name} must have dimension >= 1")
    scale = max(1.0, float(np.linalg.norm(a)))
    asym = float(np.linalg.norm(a - a.conj().T))
    if asym > HERMITIAN_TOL * scale:
        raise ValidationError(f"{name} is not Hermitian: ||M - M^dagger||_F = {asym:.3e}")
    return a


def hermitize(m: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian part, removing roundoff asymmetry."""
    return 0.5 * (m + m.conj().T)


@numba.njit(cache=True)
def _jacobi_kernel(h, rel_tol, max_sweeps, want_vectors):
    n = h.shape[0]
    a = h.copy()
    v = np.eye(n, dtype=np.complex128)
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += a[i, j].real ** 2 + a[i, j].imag ** 2
    fro = math.sqrt(fro)
    thresh = rel_tol * fro
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j].real ** 2 + a[i, j].imag ** 2
        if math.sqrt(off) <= thresh:
            lam = np.empty(n)
            for i in range(n):
                lam[i] = a[i, i].real
            return lam, v, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                # phase e^{i phi} of a[p, q]; conjugating by diag(1, e^{-i phi}) makes it real
                ph = apq / r
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                gpp = complex(c, 0.0)
                gpq = complex(s, 0.0)
                gqp = -s * ph.conjugate()
                gqq = c * ph.conjugate()
                # a <- a G
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = akp * gpp + akq * gqp
                    a[k, q] = akp * gpq + akq * gqq
                # a <- G^dagger a
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = gpp.conjugate() * apk + gqp.conjugate() * aqk
                    a[q, k] = gpq.conjugate() * apk + gqq.conjugate() * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                if not want_vectors:
                    continue
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = vkp * gpp + vkq * gqp
                    v[k, q] = vkp * gpq + vkq * gqq
    lam = np.empty(n)
    for i in range(n):
        lam[i] = a[i, i].real
    return lam, v, -1


def _eigh(a: np.ndarray, want_vectors: bool = True) -> SpectralDecomposition:
    lam, v, sweeps = _jacobi_kernel(np.ascontiguousarray(a, dtype=np.complex128), JACOBI_REL_TOL, JACOBI_MAX_SWEEPS,
                                    want_vectors)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    order = np.argsort(-lam, kind="mergesort")
    return SpectralDecomposition(lam[order], v[:, order])


def eig_hermitian(h) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.

    Uses cyclic Jacobi rotations in row-major order until the off-diagonal
    Frobenius norm drops below ``1e-12 * ||H||_F``.
    """
    return _eigh(as_hermitian(h))


def eigvalsh(h) -> np.ndarray:
    return _eigh(as_hermitian(h), want_vectors=False).eigenvalues


def _apply(dec: SpectralDecomposition, values: np.ndarray) -> np.ndarray:
    v = dec.eigenvectors
    return hermitize((v * values) @ v.conj().T)


def spectral_function(h, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Return ``V diag(f(lambda)) V^dagger`` for Hermitian ``h``.

    ``f`` acts elementwise on the real eigenvalues.  Non-finite or complex
    results (e.g. ``np.log`` of a singular matrix) raise :class:`DomainError`.
    """
    dec = eig_hermitian(h)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.asarray(f(dec.eigenvalues))
    if np.iscomplexobj(values) or not np.all(np.isfinite(values)):
        raise DomainError(f"spectral function undefined on eigenvalues {dec.eigenvalues}")
    return _apply(dec, values.astype(float))


def expm_h(h) -> np.ndarray:
    return spectral_function(h, np.exp)


def gibbs_state(h) -> np.ndarray:
    """``exp(-H) / Tr exp(-H)``, shifted by the smallest eigenvalue to avoid overflow."""
    dec = eig_hermitian(h)
    w = np.exp(-(dec.eigenvalues - dec.eigenvalues[-1]))
    return _apply(dec, w / w.sum())


def _clamped_eigenvalues(lam: np.ndarray, what: str) -> np.ndarray:
    if lam.min() < -CLAMP_TOL:
        raise DomainError(f"{what}: eigenvalue {lam.min():.3e} below -{CLAMP_TOL:g}")
    return np.clip(lam, 0.0, None)


def sqrtm_psd(h) -> np.ndarray:
    dec = eig_hermitian(h)
    return _apply(dec, np.sqrt(_clamped_eigenvalues(dec.eigenvalues, "matrix square root")))


def logm_pd(h) -> np.ndarray:
    """Matrix logarithm; singular or indefinite input raises :class:`DomainError`."""
    dec = eig_hermitian(h)
    lam = _clamped_eigenvalues(dec.eigenvalues, "matrix logarithm")
    if lam.min() <= 0.0:
        raise DomainError("matrix logarithm of a singular matrix")
    return _apply(dec, np.log(lam))


def trace_norm(m) -> float:
    return float(np.abs(eigvalsh(m)).sum())


def spectral_norm(m) -> float:
    return float(np.abs(eigvalsh(m)).max())


def tensor(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    check_dim(a.shape[0] * b.shape[0])
    return np.kron(a, b)


def tensor_power(a, k: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if k < 1:
        raise ValidationError(f"tensor power needs k >= 1, got {k}")
    check_dim(a.shape[0] ** k)
    out = a
    for _ in range(k - 1):
        out = np.kron(out, a)
    return out


def partial_trace(m, factor_dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep`` (kept factors stay in order)."""
    a = np.asarray(m, dtype=np.complex128)
    dims = [int(d) for d in factor_dims]
    if any(d < 1 for d in dims):
        raise ValidationError(f"factor dimensions must be positive, got {dims}")
    total = int(np.prod(dims))
    if a.ndim != 2 or a.shape != (total, total):
        raise ValidationError(f"matrix of shape {a.shape} does not match factor dims {dims}")
    keep = sorted(set(int(i) for i in keep))
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise ValidationError(f"keep must be a nonempty subset of factor indices, got {keep}")
    m_fac = len(dims)
    row = list(range(m_fac))
    col = [i + m_fac if i in keep else i for i in range(m_fac)]
    out_idx = keep + [i + m_fac for i in keep]
    t = np.einsum(a.reshape(dims + dims), row + col, out_idx)
    d_keep = int(np.prod([dims[i] for i in keep]))
    return t.reshape(d_keep, d_keep)


def trace_inner(a, b) -> float:
    """Real trace inner product ``Tr(A B)`` of two Hermitian matrices."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch {a.shape} vs {b.shape}")
    val = complex(np.einsum("ij,ji->", a, b))
    scale = max(1.0, float(np.linalg.norm(a)) * float(np.linalg.norm(b)))
    if abs(val.imag) > 1e-10 * scale:
        raise ConsistencyError(f"Tr(AB) has imaginary part {val.imag:.3e}; inputs not Hermitian?")
    return val.real


def _density_spectrum(rho, what: str) -> np.ndarray:
    lam = eigvalsh(rho)
    tr = float(lam.sum())
    if abs(tr - 1.0) > TRACE_TOL:
        raise DomainError(f"{what}: trace {tr!r} is not 1")
    lam = _clamped_eigenvalues(lam, what)
    if lam.max() > 1.0 + CLAMP_TOL:
        raise DomainError(f"{what}: eigenvalue {lam.max():.3e} above 1")
    return np.clip(lam, 0.0, 1.0)


def _xlogx(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def von_neumann_entropy(rho) -> float:
    """Entropy ``-sum lambda log lambda`` in nats, with ``0 log 0 = 0``."""
    return float(-_xlogx(_density_spectrum(rho, "von Neumann entropy")).sum())


def relative_entropy(rho, sigma) -> float:
    """Quantum relative entropy ``Tr(rho log rho) - Tr(rho log sigma)`` in nats."""
    neg_s = float(_xlogx(_density_spectrum(rho, "relative entropy")).sum())
    dec = eig_hermitian(sigma)
    if dec.eigenvalues.min() <= 1e-12:
        raise DomainError("relative entropy: second argument is singular")
    log_sigma = _apply(dec, np.log(dec.eigenvalues))
    return neg_s - trace_inner(np.asarray(rho, dtype=np.complex128), log_sigma)


def binary_entropy(x: float) -> float:
    """Binary entropy in bits."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy needs x in [0, 1], got {x}")
    if x in (0.0, 1.0):
        return 0.0
    return float(-x * math.log2(x) - (1 - x) * math.log2(1 - x))
