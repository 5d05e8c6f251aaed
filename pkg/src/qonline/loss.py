"""L1/L2 losses on predicted acceptance probabilities and feedback channels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

LOSS_KINDS = ("L1", "L2")
FEEDBACK_KINDS = ("exact", "noisy", "bernoulli")


@dataclass(frozen=True)
class LossSpec:
    """Loss ``|x - b|`` (L1) or ``(x - b)**2`` (L2) with its Lipschitz constant on [0, 1]."""

    kind: str
    b: float
    lipschitz: float = field(init=False)

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValidationError(f"loss kind must be one of {LOSS_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.b <= 1.0:
            raise ValidationError(f"target b must lie in [0, 1], got {self.b}")
        object.__setattr__(self, "lipschitz", 1.0 if self.kind == "L1" else 2.0)


def lipschitz_constant(kind: str) -> float:
    return LossSpec(kind, 0.0).lipschitz


def loss_value(spec: LossSpec, x: float) -> float:
    d = x - spec.b
    return abs(d) if spec.kind == "L1" else d * d


def loss_subderivative(spec: LossSpec, x: float) -> float:
    # L1 kink at x == b takes subgradient 0
    d = x - spec.b
    if spec.kind == "L1":
        return float(np.sign(d))
    return 2.0 * d


@dataclass(frozen=True)
class FeedbackMode:
    """How the adversary reports ``b_t``: exactly, within a uniform noise band, or as a 0/1 draw."""

    kind: str = "exact"
    noise: float = 0.0

    def __post_init__(self):
        if self.kind not in FEEDBACK_KINDS:
            raise ValidationError(f"feedback kind must be one of {FEEDBACK_KINDS}, got {self.kind!r}")
        if self.kind == "noisy" and not self.noise > 0:
            raise ValidationError(f"noisy feedback needs a positive noise level, got {self.noise}")

    @classmethod
    def exact(cls) -> "FeedbackMode":
        return cls("exact")

    @classmethod
    def noisy_interval(cls, eps: float) -> "FeedbackMode":
        return cls("noisy", float(eps))

    @classmethod
    def bernoulli(cls) -> "FeedbackMode":
        return cls("bernoulli")


def make_feedback(mode: FeedbackMode, true_p: float, rng: np.random.Generator) -> float:
    if not -1e-12 <= true_p <= 1 + 1e-12:
        raise ValidationError(f"true probability must lie in [0, 1], got {true_p}")
    if mode.kind == "exact":
        return float(true_p)
    if mode.kind == "noisy":
        return float(np.clip(true_p + rng.uniform(-mode.noise, mode.noise), 0.0, 1.0))
    return float(rng.random() < true_p)
