"""Learning by postselection on amplified hypotheses.

The learner keeps a state on ``k`` registers of ``n`` qubits each.  For a
measurement ``E`` and target ``b`` the amplified measurement ``E*`` applies
``E`` to every register and accepts when the fraction of accepting registers
is within ``eps/2`` of ``b``.  When ``E*`` already accepts the hypothesis with
probability at least ``1 - eps/6`` nothing changes; otherwise the hypothesis is
replaced by its postselected state.

All the operators ``E``-on-register products commute, so ``E*`` is diagonal in
the basis ``V^{(x)k}`` where ``V`` diagonalizes ``E``.  The code works in that
basis instead of exponentiating ``2^{kn}``-dimensional matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable

import numpy as np

from . import spectra
from .errors import DegeneratePostselectionError, ValidationError
from .loss import FeedbackMode, make_feedback
from .qmodel import born_probability, check_density, check_measurement, n_qubits, postselect, postselect_dilation
from .records import RecordBuilder, TrialRecord

MAX_REGISTERS = 20
WINDOW_SLACK = 1e-12


def accepted_counts(b: float, epsilon: float, k: int) -> list[int]:
    """Numbers ``j`` of accepting registers with ``|j/k - b| <= eps/2``."""
    return [j for j in range(k + 1) if abs(j / k - b) <= epsilon / 2 + WINDOW_SLACK]


def default_k(n: int, epsilon: float, c: float = 8.0) -> int:
    """``ceil((C/eps^2) log(n/eps))`` limited by the dimension cap and the pattern cap."""
    k_theory = math.ceil(c / epsilon**2 * math.log(max(n / epsilon, 1.0)))
    k_cap = int(math.log2(spectra.dim_cap())) // max(n, 1)
    return max(1, min(k_theory, k_cap, MAX_REGISTERS))


@dataclass(frozen=True)
class PostselConfig:
    epsilon: float
    k: int
    feedback_tolerance: float | None = None
    c: float = 8.0
    kraus: str = "sqrt"

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValidationError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not 1 <= self.k <= MAX_REGISTERS:
            raise ValidationError(f"register count must lie in [1, {MAX_REGISTERS}], got {self.k}")
        if self.kraus not in ("sqrt", "patterns"):
            raise ValidationError(f"kraus must be 'sqrt' or 'patterns', got {self.kraus!r}")
        if self.feedback_tolerance is None:
            object.__setattr__(self, "feedback_tolerance", self.epsilon / 6)

    @property
    def threshold(self) -> float:
        return 1.0 - self.epsilon / 6


@dataclass(frozen=True)
class AmplifiedHypothesis:
    n: int
    k: int
    state: np.ndarray

    @property
    def dim(self) -> int:
        return 2 ** (self.n * self.k)

    @classmethod
    def maximally_mixed(cls, n: int, k: int) -> "AmplifiedHypothesis":
        d = spectra.check_dim(2 ** (n * k))
        return cls(n, k, np.eye(d, dtype=np.complex128) / d)

    @classmethod
    def product(cls, rho: np.ndarray, k: int) -> "AmplifiedHypothesis":
        return cls(n_qubits(rho), k, spectra.tensor_power(rho, k))


class AmplifiedMeasurement:
    """``E*`` in the eigenbasis ``W = V^{(x)k}`` of the single-register measurement."""

    def __init__(self, e: np.ndarray, b: float, epsilon: float, k: int):
        self.n = n_qubits(e)
        self.k = k
        spectra.check_dim(2 ** (self.n * k))
        dec = spectra.eig_hermitian(e)
        self.u = np.clip(dec.eigenvalues, 0.0, 1.0)
        self.counts = accepted_counts(b, epsilon, k)
        self.basis = spectra.tensor_power(dec.eigenvectors, k)
        self.spectrum = self._spectrum()

    def _count_weights(self) -> list[np.ndarray]:
        # weights[j][x] = sum over patterns with j accepts of prod of per-register eigenvalues
        weights = [np.ones(1)]
        for _ in range(self.k):
            nxt = []
            for j in range(len(weights) + 1):
                w = 0.0
                if j < len(weights):
                    w = w + np.kron(weights[j], 1.0 - self.u)
                if j >= 1:
                    w = w + np.kron(weights[j - 1], self.u)
                nxt.append(w)
            weights = nxt
        return weights

    def _spectrum(self) -> np.ndarray:
        weights = self._count_weights()
        out = np.zeros(self.basis.shape[0])
        for j in self.counts:
            out = out + weights[j]
        return np.clip(out, 0.0, 1.0)

    def matrix(self) -> np.ndarray:
        w = self.basis
        return spectra.hermitize((w * self.spectrum) @ w.conj().T)

    def pattern_kraus_diagonals(self) -> list[np.ndarray]:
        """Diagonals (in ``W``) of ``(x)_j sqrt(M_{s_j})`` for every accepted pattern ``s``."""
        s1, s0 = np.sqrt(self.u), np.sqrt(1.0 - self.u)
        out = []
        for s in product((0, 1), repeat=self.k):
            if sum(s) not in self.counts:
                continue
            diag = np.ones(1)
            for bit in s:
                diag = np.kron(diag, s1 if bit else s0)
            out.append(diag)
        return out

    def acceptance(self, state: np.ndarray) -> float:
        w = self.basis
        diag = np.einsum("ij,jk,ki->i", w.conj().T, state, w).real
        return float(np.clip(diag @ self.spectrum, 0.0, 1.0))

    def postselect(self, state: np.ndarray, kraus: str = "sqrt") -> tuple[np.ndarray, float]:
        w = self.basis
        rot = w.conj().T @ state @ w
        if kraus == "sqrt":
            r = np.sqrt(self.spectrum)
            mixed = rot * np.outer(r, r)
        else:
            mixer = np.zeros(rot.shape)
            for kd in self.pattern_kraus_diagonals():
                mixer += np.outer(kd, kd)
            mixed = rot * mixer
        unnorm = spectra.hermitize(w @ mixed @ w.conj().T)
        p = float(np.trace(unnorm).real)
        if p <= 1e-12:
            raise DegeneratePostselectionError(f"amplified measurement accepts with probability {p:.3e}")
        return unnorm / p, p


def amplified_measurement(e, b: float, epsilon: float, k: int) -> np.ndarray:
    return AmplifiedMeasurement(spectra.as_hermitian(e), b, epsilon, k).matrix()


def register_swap(state: np.ndarray, n: int, k: int, i: int) -> np.ndarray:
    """Conjugate by the swap of registers ``i`` and ``i + 1``."""
    d = 2**n
    t = state.reshape((d,) * (2 * k))
    axes = list(range(2 * k))
    for off in (0, k):
        axes[off + i], axes[off + i + 1] = axes[off + i + 1], axes[off + i]
    return t.transpose(axes).reshape(state.shape)


def symmetry_defect(h: AmplifiedHypothesis) -> float:
    """Largest entrywise change under any adjacent register swap."""
    if h.k < 2:
        return 0.0
    return max(float(np.abs(register_swap(h.state, h.n, h.k, i) - h.state).max()) for i in range(h.k - 1))


def check_hypothesis(h: AmplifiedHypothesis, tol: float = 1e-8) -> None:
    check_density(h.state, "amplified hypothesis")
    defect = symmetry_defect(h)
    if defect > tol:
        raise ValidationError(f"amplified hypothesis not register-symmetric (defect {defect:.3e})")


def reduced_hypothesis(h: AmplifiedHypothesis, register: int = 0) -> np.ndarray:
    if h.k == 1:
        return h.state
    return spectra.partial_trace(h.state, [2**h.n] * h.k, [register])


def postselection_step(h: AmplifiedHypothesis, e, b: float, cfg: PostselConfig):
    """Returns ``(new hypothesis, updated, acceptance of E* on the old hypothesis)``."""
    amp = AmplifiedMeasurement(np.asarray(e, dtype=np.complex128), b, cfg.epsilon, cfg.k)
    acc = amp.acceptance(h.state)
    if acc >= cfg.threshold:
        return h, False, acc
    new_state, _ = amp.postselect(h.state, cfg.kraus)
    return AmplifiedHypothesis(h.n, h.k, new_state), True, acc


@dataclass
class PostselRun:
    records: list[TrialRecord]
    acceptances: list[float] = field(default_factory=list)
    good_gaps: list[float] = field(default_factory=list)  # |prediction - b| on good rounds
    symmetry_defects: list[float] = field(default_factory=list)
    degenerate_rounds: list[int] = field(default_factory=list)
    final: AmplifiedHypothesis | None = None

    @property
    def update_count(self) -> int:
        return sum(r.updated for r in self.records)

    @property
    def mistake_count(self) -> int:
        return sum(r.mistake for r in self.records)


def run_postselection_learner(rho: np.ndarray, measurements: Iterable[np.ndarray], feedback: FeedbackMode,
                              cfg: PostselConfig, rng: np.random.Generator, *,
                              check_invariants: bool = True, on_degenerate: str = "abort") -> PostselRun:
    """Drive the postselection learner against a hidden state.

    Prediction at round ``t`` is ``Tr(E_t omega_{t-1})`` with ``omega`` the
    one-register reduction of the amplified hypothesis.

    A round where ``E*`` accepts with probability ~0 (at small ``k`` the
    window may contain no count at all) raises
    :class:`DegeneratePostselectionError` when ``on_degenerate="abort"``.
    With ``"skip"`` the hypothesis is kept, the round is logged as not
    updated and its index is stored in ``degenerate_rounds``.
    """
    if on_degenerate not in ("abort", "skip"):
        raise ValidationError(f"on_degenerate must be 'abort' or 'skip', got {on_degenerate!r}")
    rho = check_density(rho, "hidden state")
    n = n_qubits(rho)
    h = AmplifiedHypothesis.maximally_mixed(n, cfg.k)
    run = PostselRun([])
    builder = RecordBuilder()
    for e in measurements:
        e = check_measurement(e)
        omega = reduced_hypothesis(h)
        pred = born_probability(e, omega)
        truth = born_probability(e, rho)
        b = make_feedback(feedback, truth, rng)
        try:
            h, updated, acc = postselection_step(h, e, b, cfg)
        except DegeneratePostselectionError:
            if on_degenerate == "abort":
                raise
            updated, acc = False, 0.0
            run.degenerate_rounds.append(len(builder.records) + 1)
        if acc >= cfg.threshold:
            run.good_gaps.append(abs(pred - b))
        if check_invariants:
            check_hypothesis(h)
            run.symmetry_defects.append(symmetry_defect(h))
        run.acceptances.append(acc)
        builder.add(pred, b, abs(pred - b), abs(truth - b), abs(pred - truth) > cfg.epsilon, updated)
    run.records = builder.records
    run.final = h
    return run


@dataclass(frozen=True)
class UnionBoundResult:
    success_prob: float
    trace_dist: float
    eps_max: float
    k: int
    bounds_ok: bool
    degenerate: bool = False


def union_bound_check(phi, measurements, dilated: bool = False) -> UnionBoundResult:
    """Apply postselections in sequence and compare with ``1 - 2 sqrt(k eps)`` and ``4 sqrt(k eps)``.

    By default each step is the Kraus map ``sqrt(E) . sqrt(E)``; with
    ``dilated`` it is the ancilla construction with the uncomputing
    ``U^{-1}`` (see :func:`qonline.qmodel.postselect_dilation`).
    """
    phi = check_density(phi)
    ms = [check_measurement(e) for e in measurements]
    k = len(ms)
    eps_max = max((1.0 - born_probability(e, phi) for e in ms), default=0.0)
    state, success = phi, 1.0
    for e in ms:
        state, p = postselect_dilation(e, state) if dilated else postselect(e, state)
        success *= p
        if state is None:
            return UnionBoundResult(0.0, float("nan"), eps_max, k, False, True)
    dist = spectra.trace_norm(state - phi)
    root = math.sqrt(k * eps_max)
    ok = success >= 1 - 2 * root - 1e-9 and dist <= 4 * root + 1e-9
    return UnionBoundResult(success, dist, eps_max, k, ok)
