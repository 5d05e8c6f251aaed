"""Online learners for quantum states: RFTL with von Neumann entropy and matrix multiplicative weights.

Both learners keep the running sum of loss gradients and predict a Gibbs
state of it.  Over the full set of density matrices the entropy-regularized
objective

    Phi_t(X) = eta * sum_s Tr(grad_s X) + Tr(X log X)

is minimized by ``exp(-eta G) / Tr exp(-eta G)`` with ``G = sum_s grad_s``, so
the RFTL step is evaluated in closed form and its optimality is checked
separately (:func:`rftl_optimality_gap`, :func:`rftl_objective`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import spectra
from .errors import ContractError, ValidationError
from .loss import LossSpec, loss_subderivative
from .qmodel import born_probability, maximally_mixed, random_density

VARIANTS = ("rftl", "mmw")
ETA_CLAMP = 0.49
LOG2 = math.log(2.0)


def _variant(v: str) -> str:
    v = str(v).lower()
    if v not in VARIANTS:
        raise ValidationError(f"variant must be one of {VARIANTS}, got {v!r}")
    return v


@dataclass(frozen=True)
class LearnerState:
    n: int
    eta: float
    lipschitz: float
    variant: str
    grad_sum: np.ndarray
    iterate: np.ndarray
    t: int = 0
    update_count: int = 0

    @property
    def dim(self) -> int:
        return 2**self.n

    @property
    def effective_eta(self) -> float:
        """Multiplier of the gradient sum inside the exponent."""
        return self.eta / self.lipschitz if self.variant == "mmw" else self.eta


def initial_state(n: int, eta: float, lipschitz: float = 1.0, variant: str = "mmw") -> LearnerState:
    variant = _variant(variant)
    if not 0.0 < eta < 0.5:
        raise ValidationError(f"learning rate must lie in (0, 1/2), got {eta}")
    if not lipschitz > 0:
        raise ValidationError(f"Lipschitz constant must be positive, got {lipschitz}")
    if n < 0:
        raise ValidationError(f"qubit count must be nonnegative, got {n}")
    omega = maximally_mixed(n)
    return LearnerState(n, float(eta), float(lipschitz), variant, np.zeros_like(omega), omega)


def default_eta(variant: str, T: int, n: int, lipschitz: float = 1.0) -> float:
    """Learning rate that attains the regret bound for a declared horizon ``T``.

    Values at or above 1/2 are clamped to 0.49 with a warning.
    """
    variant = _variant(variant)
    if T < 1 or n < 1:
        raise ValidationError(f"default learning rate needs T >= 1 and n >= 1, got T={T}, n={n}")
    if variant == "rftl":
        eta = math.sqrt(LOG2 * n / (2.0 * T * lipschitz**2))
    else:
        eta = math.sqrt(LOG2 * n / (4.0 * T))
    if eta >= 0.5:
        warnings.warn(f"default learning rate {eta:.4f} >= 1/2; clamped to {ETA_CLAMP}", stacklevel=2)
        eta = ETA_CLAMP
    return eta


def theoretical_regret_bound(variant: str, T: int, n: int, lipschitz: float = 1.0) -> float:
    variant = _variant(variant)
    if variant == "rftl":
        return 2.0 * lipschitz * math.sqrt(2.0 * LOG2 * T * n)
    return 2.0 * lipschitz * math.sqrt(LOG2 * T * n)


def mistake_bound(variant: str, n: int, epsilon: float) -> float:
    """Largest update count compatible with ``(eps/3) U <= regret bound(U)``."""
    variant = _variant(variant)
    if not 0.0 < epsilon <= 1.0:
        raise ValidationError(f"epsilon must lie in (0, 1], got {epsilon}")
    c = 72.0 if variant == "rftl" else 36.0
    return c * LOG2 * n / epsilon**2


def mistake_eta(variant: str, epsilon: float) -> float:
    """Learning rate for the mistake-filtered learner.

    The update count U obeys ``(eps/3 - 2 eta) U <= n log 2 / eta`` for RFTL
    and ``(eps/3 - eta) U <= n log 2 / eta`` for MMW; these rates minimize the
    right-hand side and recover :func:`mistake_bound` exactly.
    """
    variant = _variant(variant)
    return epsilon / 12.0 if variant == "rftl" else epsilon / 6.0


def gradient(spec: LossSpec, e: np.ndarray, omega: np.ndarray) -> np.ndarray:
    return loss_subderivative(spec, born_probability(e, omega)) * e


def _gibbs_update(state: LearnerState, grad: np.ndarray, updated: bool) -> LearnerState:
    g = state.grad_sum + spectra.hermitize(np.asarray(grad, dtype=np.complex128))
    omega = spectra.gibbs_state(state.effective_eta * g)
    return replace(state, grad_sum=g, iterate=omega, t=state.t + 1,
                   update_count=state.update_count + int(updated))


def mmw_update(state: LearnerState, grad: np.ndarray) -> LearnerState:
    """``omega <- exp(-(eta/L) G) / Tr(...)`` after adding ``grad`` to ``G``."""
    if state.variant != "mmw":
        raise ContractError(f"mmw_update called on a {state.variant} learner")
    norm = spectra.spectral_norm(grad)
    if norm > state.lipschitz + 1e-9:
        raise ContractError(f"gradient spectral norm {norm:.6g} exceeds L = {state.lipschitz}")
    return _gibbs_update(state, grad, True)


def rftl_update(state: LearnerState, grad: np.ndarray) -> LearnerState:
    """Follow-the-regularized-leader step with the negative entropy regularizer."""
    if state.variant != "rftl":
        raise ContractError(f"rftl_update called on a {state.variant} learner")
    return _gibbs_update(state, spectra.as_hermitian(grad, "gradient"), True)


def update(state: LearnerState, grad: np.ndarray) -> LearnerState:
    if state.variant == "mmw":
        return mmw_update(state, grad)
    return rftl_update(state, grad)


def negative_entropy(phi: np.ndarray) -> float:
    return -spectra.von_neumann_entropy(phi)


def rftl_objective(phi: np.ndarray, grad_sum: np.ndarray, eta: float) -> float:
    return eta * spectra.trace_inner(grad_sum, phi) + negative_entropy(phi)


def rftl_optimality_gap(grad_sum: np.ndarray, eta: float, prev: np.ndarray, new: np.ndarray) -> float:
    """``(eta G + I + log new) . (prev - new)``; nonnegative when ``new`` is optimal."""
    d = new.shape[0]
    grad_phi = eta * grad_sum + np.eye(d) + spectra.logm_pd(new)
    return spectra.trace_inner(grad_phi, prev - new)


def stability_slack(eta: float, grad: np.ndarray, prev: np.ndarray, new: np.ndarray) -> float:
    """``eta grad . (prev - new) - 1/2 ||prev - new||_Tr^2``; nonnegative per step."""
    diff = prev - new
    return eta * spectra.trace_inner(grad, diff) - 0.5 * spectra.trace_norm(diff) ** 2


@dataclass
class ComparatorPanel:
    """Fixed random density matrices used to spot-check RFTL optimality.

    Their entropies are computed once; the objective at each panel member
    for a new gradient sum only needs the linear term.
    """

    states: np.ndarray
    neg_entropies: np.ndarray = field(init=False)

    def __post_init__(self):
        self.neg_entropies = np.array([negative_entropy(s) for s in self.states])

    @classmethod
    def random(cls, n: int, count: int, rng: np.random.Generator) -> "ComparatorPanel":
        return cls(np.array([random_density(n, rng) for _ in range(count)]))

    def objectives(self, grad_sum: np.ndarray, eta: float) -> np.ndarray:
        lin = np.einsum("ij,kji->k", grad_sum, self.states).real
        return eta * lin + self.neg_entropies

    def margin(self, state: LearnerState) -> float:
        """Smallest ``objective(panel member) - objective(iterate)``."""
        eta = state.effective_eta
        own = rftl_objective(state.iterate, state.grad_sum, eta)
        return float(self.objectives(state.grad_sum, eta).min() - own)


def mistake_filtered_step(state: LearnerState, e: np.ndarray, b: float, epsilon: float):
    """One round of the mistake-bounded learner.

    Updates (with L1 loss toward ``b``) only when the prediction is more
    than ``2 eps / 3`` away from ``b``.  Returns ``(state, predicted, updated)``.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValidationError(f"epsilon must lie in (0, 1], got {epsilon}")
    if state.lipschitz != 1.0:
        raise ValidationError("the mistake-filtered learner runs with the 1-Lipschitz L1 loss")
    predicted = born_probability(e, state.iterate)
    if abs(predicted - b) > 2.0 * epsilon / 3.0:
        grad = gradient(LossSpec("L1", b), e, state.iterate)
        return update(state, grad), predicted, True
    return state, predicted, False


@dataclass
class RegretLedger:
    """Per-round losses of the learner and of a fixed comparator."""

    rows: list = field(default_factory=list)
    cum_loss: float = 0.0
    cum_comparator_loss: float = 0.0

    def add(self, prediction: float, loss: float, comparator_loss: float = 0.0) -> None:
        self.cum_loss += loss
        self.cum_comparator_loss += comparator_loss
        self.rows.append((len(self.rows) + 1, prediction, loss, comparator_loss))

    @property
    def regret(self) -> float:
        return self.cum_loss - self.cum_comparator_loss
