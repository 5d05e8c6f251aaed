"""Information bounds on encoding bits into qubits.

Includes the pivot translation that turns a margin-``eps`` test around an
arbitrary pivot into a test around 1/2, the resulting serial-encoding
capacity, and an adversary that runs matrix multiplicative weights against
a random access code to witness ``k/2 <= p k + 2 sqrt(k n log 2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import learn, spectra
from .errors import ValidationError
from .loss import LossSpec
from .qmodel import (born_probability, check_density, check_measurement, matrix_from_json, matrix_to_json,
                     random_density, random_measurement)


def pivot_translate(e_prime, a_v: float) -> np.ndarray:
    """Affinely rescale ``E'`` so that acceptance probability ``a_v`` maps to 1/2."""
    if not 0.0 <= a_v <= 1.0:
        raise ValidationError(f"pivot must lie in [0, 1], got {a_v}")
    e_prime = check_measurement(e_prime, "E'")
    if a_v >= 0.5:
        return e_prime / (2.0 * a_v)
    d = e_prime.shape[0]
    return (e_prime + (1.0 - 2.0 * a_v) * np.eye(d)) / (2.0 * (1.0 - a_v))


def pivot_map(x: float, a_v: float) -> float:
    """Acceptance probability after :func:`pivot_translate` as a function of the old one."""
    if a_v >= 0.5:
        return x / (2.0 * a_v)
    return (x + 1.0 - 2.0 * a_v) / (2.0 * (1.0 - a_v))


def serial_encoding_max_bits(n: int, epsilon: float) -> float:
    """Largest ``k`` with ``n >= (1 - H((1 - eps)/2)) k`` (binary entropy ``H``)."""
    if not 0.0 < epsilon <= 1.0:
        raise ValidationError(f"epsilon must lie in (0, 1], got {epsilon}")
    return n / (1.0 - spectra.binary_entropy((1.0 - epsilon) / 2.0))


def rac_min_qubits(k: int, p: float) -> float:
    if not 0.0 <= p <= 0.5:
        raise ValidationError(f"decoding error must lie in [0, 1/2], got {p}")
    return (0.5 - p) ** 2 * k / (4.0 * math.log(2.0))


def rac_bound_check(n: int, k: int, p: float) -> bool:
    return n >= rac_min_qubits(k, p) - 1e-12


@dataclass
class RandomAccessCode:
    """Bit strings encoded as ``n``-qubit states with prefix-dependent decoders.

    ``decoders`` maps a prefix ``y_1 ... y_{i-1}`` (as a string of 0/1) to the
    measurement that recovers bit ``i``.
    """

    n: int
    k: int
    encoder: Mapping[str, np.ndarray]
    decoders: Mapping[str, np.ndarray]

    def validate(self) -> "RandomAccessCode":
        for y in _bitstrings(self.k):
            if y not in self.encoder:
                raise ValidationError(f"encoder has no state for {y!r}")
            rho = check_density(self.encoder[y], f"encoding of {y}")
            if rho.shape[0] != 2**self.n:
                raise ValidationError(f"encoding of {y} has dimension {rho.shape[0]}, expected {2**self.n}")
        for prefix, e in self.decoders.items():
            check_measurement(e, f"decoder for prefix {prefix!r}")
        return self

    def decoder(self, prefix: str) -> np.ndarray:
        try:
            return self.decoders[prefix]
        except KeyError:
            raise ValidationError(f"no decoder for index {len(prefix) + 1} after prefix {prefix!r}") from None

    @classmethod
    def nonadaptive(cls, n: int, k: int, encoder: Mapping[str, np.ndarray], measurements) -> "RandomAccessCode":
        """Code whose decoder for bit ``i`` ignores the prefix."""
        measurements = list(measurements)
        if len(measurements) != k:
            raise ValidationError(f"need {k} decoders, got {len(measurements)}")
        decoders = {p: measurements[len(p)] for length in range(k) for p in _bitstrings(length)}
        return cls(n, k, dict(encoder), decoders)

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n,
            "k": self.k,
            "encoder": {y: matrix_to_json(m) for y, m in sorted(self.encoder.items())},
            "decoders": {p: matrix_to_json(m) for p, m in sorted(self.decoders.items())},
        })

    @classmethod
    def from_json(cls, text: str) -> "RandomAccessCode":
        obj = json.loads(text)
        try:
            return cls(int(obj["n"]), int(obj["k"]),
                       {y: matrix_from_json(m) for y, m in obj["encoder"].items()},
                       {p: matrix_from_json(m) for p, m in obj["decoders"].items()}).validate()
        except KeyError as exc:
            raise ValidationError(f"code fixture missing field {exc}") from None


def _bitstrings(length: int) -> list[str]:
    return [format(i, f"0{length}b") if length else "" for i in range(2**length)]


@dataclass(frozen=True)
class RacAdversaryResult:
    y: str
    p_emp: float
    inequality_ok: bool
    learner_loss: float
    regret_bound: float


def rac_adversary_run(code: RandomAccessCode, eta: float | None = None) -> RacAdversaryResult:
    """Play MMW against the code, labelling each bit opposite to the learner's guess.

    Bit ``t`` is 0 when the learner accepts with probability above 1/2 and 1
    otherwise, so the learner loses at least 1/2 per round while the encoding
    of the final string loses at most the code's error on it.
    """
    k, n = code.k, code.n
    if eta is None:
        eta = learn.default_eta("mmw", k, n)
    state = learn.initial_state(n, eta, 1.0, "mmw")
    y = ""
    preds, decoders = [], []
    for _ in range(k):
        e = code.decoder(y)
        pred = born_probability(e, state.iterate)
        bit = 0 if pred > 0.5 else 1
        grad = learn.gradient(LossSpec("L1", float(bit)), e, state.iterate)
        state = learn.mmw_update(state, grad)
        preds.append(pred)
        decoders.append(e)
        y += str(bit)
    rho_y = code.encoder[y]
    p_emp = max(abs(born_probability(e, rho_y) - int(b)) for e, b in zip(decoders, y))
    learner_loss = sum(abs(p - int(b)) for p, b in zip(preds, y))
    bound = learn.theoretical_regret_bound("mmw", k, n)
    ok = k / 2.0 <= p_emp * k + bound + 1e-9
    return RacAdversaryResult(y, p_emp, ok, learner_loss, bound)


def random_code(n: int, k: int, rng: np.random.Generator, adaptive: bool = True) -> RandomAccessCode:
    """Random encoder states with random (optionally prefix-dependent) decoders."""
    encoder = {y: random_density(n, rng) for y in _bitstrings(k)}
    if adaptive:
        decoders = {p: random_measurement(n, rng) for length in range(k) for p in _bitstrings(length)}
        return RandomAccessCode(n, k, encoder, decoders)
    return RandomAccessCode.nonadaptive(n, k, encoder, [random_measurement(n, rng) for _ in range(k)])
