"""Experiment orchestration: adversaries, end-to-end runs and deterministic reporting."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import bounds, learn, spectra
from .errors import DegeneratePostselectionError, ValidationError
from .loss import FEEDBACK_KINDS, LOSS_KINDS, FeedbackMode, LossSpec, lipschitz_constant, loss_value, make_feedback
from .postsel import (AmplifiedHypothesis, PostselConfig, default_k, postselection_step, run_postselection_learner,
                      union_bound_check)
from .qmodel import (born_probability, check_density, check_measurement, child_rng, load_matrices,
                     matrix_from_json, maximally_mixed, random_density, random_measurement)
from .records import CSV_COLUMNS, RecordBuilder, TrialRecord

KINDS = ("regret", "mistake", "postselect", "union-bound", "rac")
ADVERSARIES = ("random", "adaptive", "fixture")
_ADVERSARY_ALIASES = {"adaptive-max-loss": "adaptive"}

# stream indices for seed splitting
_HIDDEN, _MEASURE, _FEEDBACK, _PANEL, _INSTANCE = range(5)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "regret"
    n: int = 1
    T: int = 100
    variant: str = "mmw"
    loss: str = "L1"
    feedback: str = "exact"
    feedback_noise: float | None = None
    epsilon: float = 0.1
    eta: float | None = None
    k: int | None = None
    adversary: str = "random"
    fixture: str | None = None
    hidden_state: str | None = None
    seed: int = 0
    output: str | None = None
    instances: int = 100
    check_optimality: bool = False
    panel_size: int = 100
    kraus: str = "sqrt"

    def __post_init__(self):
        def bad(msg):
            raise ValidationError(f"invalid config: {msg}")

        if self.kind not in KINDS:
            bad(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not isinstance(self.n, int) or self.n < 1:
            bad(f"n must be a positive integer, got {self.n!r}")
        spectra.check_dim(2**self.n)
        if not isinstance(self.T, int) or self.T < 0:
            bad(f"T must be a nonnegative integer, got {self.T!r}")
        if str(self.variant).lower() not in learn.VARIANTS:
            bad(f"variant must be one of {learn.VARIANTS}, got {self.variant!r}")
        object.__setattr__(self, "variant", str(self.variant).lower())
        if self.loss not in LOSS_KINDS:
            bad(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")
        if self.feedback not in FEEDBACK_KINDS:
            bad(f"feedback must be one of {FEEDBACK_KINDS}, got {self.feedback!r}")
        if self.feedback_noise is not None and not self.feedback_noise > 0:
            bad(f"feedback_noise must be positive, got {self.feedback_noise}")
        if not 0.0 < self.epsilon <= 1.0:
            bad(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.eta is not None and not 0.0 < self.eta < 0.5:
            bad(f"eta must lie in (0, 1/2), got {self.eta}")
        if self.k is not None and (not isinstance(self.k, int) or self.k < 1):
            bad(f"k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "adversary", _ADVERSARY_ALIASES.get(self.adversary, self.adversary))
        if self.adversary not in ADVERSARIES:
            bad(f"adversary must be one of {ADVERSARIES}, got {self.adversary!r}")
        if self.adversary == "fixture" and not self.fixture:
            bad("the fixture adversary needs a fixture path")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            bad(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.instances < 1 or self.panel_size < 1:
            bad("instances and panel_size must be positive")
        if self.kraus not in ("sqrt", "patterns"):
            bad(f"kraus must be 'sqrt' or 'patterns', got {self.kraus!r}")

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ValidationError(f"unknown config keys: {unknown}")
        return cls(**obj)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        obj = json.loads(text)
        if not isinstance(obj, dict):
            raise ValidationError("config must be a JSON object")
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ExperimentResult:
    kind: str
    columns: tuple
    rows: list
    summary: dict
    records: list[TrialRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("passed", False))


def adaptive_adversary_measurement(omega: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Projector onto the positive or negative eigenspace of ``omega - rho``, whichever separates more.

    Either projector attains ``|Tr(E (omega - rho))| = 1/2 ||omega - rho||_Tr``,
    the largest gap any two-outcome measurement can show.
    """
    dec = spectra.eig_hermitian(spectra.hermitize(omega - rho))
    lam, v = dec.eigenvalues, dec.eigenvectors
    pos, neg = lam > 0, lam < 0
    gap_pos, gap_neg = lam[pos].sum(), -lam[neg].sum()
    mask = pos if gap_pos >= gap_neg else neg
    vs = v[:, mask]
    return spectra.hermitize(vs @ vs.conj().T)


def _load_state(path: str | None, n: int, rng) -> np.ndarray:
    if path is None:
        return random_density(n, rng)
    rho = check_density(matrix_from_json(json.loads(Path(path).read_text())), "hidden state")
    if rho.shape[0] != 2**n:
        raise ValidationError(f"hidden state has dimension {rho.shape[0]}, config says n = {n}")
    return rho


def _fixture_measurements(cfg: ExperimentConfig) -> list[np.ndarray]:
    ms = [check_measurement(m) for m in load_matrices(Path(cfg.fixture).read_text())]
    if not ms:
        raise ValidationError("fixture contains no measurements")
    if any(m.shape[0] != 2**cfg.n for m in ms):
        raise ValidationError(f"fixture measurements do not act on {cfg.n} qubits")
    return ms


class Adversary:
    def __init__(self, cfg: ExperimentConfig, rho: np.ndarray):
        self.kind = cfg.adversary
        self.n = cfg.n
        self.rho = rho
        self.rng = child_rng(cfg.seed, _MEASURE)
        self.fixture = _fixture_measurements(cfg) if self.kind == "fixture" else None
        self.t = 0

    def next(self, omega: np.ndarray) -> np.ndarray:
        self.t += 1
        if self.kind == "random":
            return random_measurement(self.n, self.rng)
        if self.kind == "adaptive":
            return adaptive_adversary_measurement(omega, self.rho)
        return self.fixture[(self.t - 1) % len(self.fixture)]


def _learner_eta(cfg: ExperimentConfig, lipschitz: float) -> float:
    if cfg.eta is not None:
        return cfg.eta
    if cfg.kind == "mistake":
        return learn.mistake_eta(cfg.variant, cfg.epsilon)
    return learn.default_eta(cfg.variant, max(cfg.T, 1), cfg.n, lipschitz)


@dataclass
class _Checks:
    """Running minima of the per-update numerical certificates."""

    panel: learn.ComparatorPanel | None
    min_stability_slack: float = math.inf
    min_optimality_gap: float = math.inf
    min_panel_margin: float = math.inf
    max_grad_sum_excess: float = -math.inf

    def after_update(self, old: learn.LearnerState, new: learn.LearnerState, grad: np.ndarray) -> None:
        eta = new.effective_eta
        self.min_stability_slack = min(self.min_stability_slack,
                                       learn.stability_slack(eta, grad, old.iterate, new.iterate))
        norm = spectra.spectral_norm(new.grad_sum) if new.update_count else 0.0
        self.max_grad_sum_excess = max(self.max_grad_sum_excess, norm - new.lipschitz * new.update_count)
        if self.panel is not None:
            gap = learn.rftl_optimality_gap(new.grad_sum, eta, old.iterate, new.iterate)
            self.min_optimality_gap = min(self.min_optimality_gap, gap)
            self.min_panel_margin = min(self.min_panel_margin, self.panel.margin(new))

    def summary(self) -> dict:
        def fin(x):
            return None if math.isinf(x) else x

        return {
            "min_stability_slack": fin(self.min_stability_slack),
            "min_optimality_gap": fin(self.min_optimality_gap),
            "min_panel_margin": fin(self.min_panel_margin),
            "max_grad_sum_excess": fin(self.max_grad_sum_excess),
        }


def _make_checks(cfg: ExperimentConfig) -> _Checks:
    panel = None
    if cfg.check_optimality:
        panel = learn.ComparatorPanel.random(cfg.n, cfg.panel_size, child_rng(cfg.seed, _PANEL))
    return _Checks(panel)


def run_regret_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Drive RFTL or MMW for ``T`` rounds; regret is measured against the hidden state."""
    rho = _load_state(cfg.hidden_state, cfg.n, child_rng(cfg.seed, _HIDDEN))
    fb_mode = FeedbackMode(cfg.feedback, cfg.feedback_noise or (cfg.epsilon if cfg.feedback == "noisy" else 0.0))
    fb_rng = child_rng(cfg.seed, _FEEDBACK)
    lip = lipschitz_constant(cfg.loss)
    bound = learn.theoretical_regret_bound(cfg.variant, cfg.T, cfg.n, lip)
    eta = _learner_eta(cfg, lip)
    state = learn.initial_state(cfg.n, eta, lip, cfg.variant)
    adversary = Adversary(cfg, rho)
    checks = _make_checks(cfg)
    builder = RecordBuilder()
    linearized = 0.0
    history = []
    for _ in range(cfg.T):
        omega = state.iterate
        e = adversary.next(omega)
        pred = born_probability(e, omega)
        truth = born_probability(e, rho)
        b = make_feedback(fb_mode, truth, fb_rng)
        spec = LossSpec(cfg.loss, b)
        grad = learn.gradient(spec, e, omega)
        linearized += spectra.trace_inner(grad, omega - rho)
        new = learn.update(state, grad)
        checks.after_update(state, new, grad)
        builder.add(pred, b, loss_value(spec, pred), loss_value(spec, truth), abs(pred - truth) > cfg.epsilon, True)
        history.append((e, spec))
        state = new
    regret = builder.cum_loss - builder.cum_comparator_loss
    candidates = {"hidden": builder.cum_comparator_loss}
    for name, phi in (("maximally_mixed", maximally_mixed(cfg.n)), ("final_iterate", state.iterate)):
        candidates[name] = sum(loss_value(s, born_probability(e, phi)) for e, s in history)
    best = min(candidates, key=candidates.get)
    summary = {
        "kind": "regret",
        "config": cfg.to_dict(),
        "eta": eta,
        "lipschitz": lip,
        "T": cfg.T,
        "regret": regret,
        "regret_bound": bound,
        "passed": bool(regret <= bound + 1e-6),
        "cum_loss": builder.cum_loss,
        "cum_comparator_loss": builder.cum_comparator_loss,
        "linearized_regret": linearized,
        "linearization_ok": bool(regret <= linearized + 1e-8 * max(cfg.T, 1)),
        "comparator_losses": candidates,
        "best_comparator": best,
        "best_comparator_regret": builder.cum_loss - candidates[best],
        **checks.summary(),
    }
    return ExperimentResult("regret", CSV_COLUMNS, [r.as_row() for r in builder.records], summary, builder.records)


def run_mistake_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Realizable run of the mistake-filtered learner with feedback accurate to ``eps/3``."""
    eps = cfg.epsilon
    rho = _load_state(cfg.hidden_state, cfg.n, child_rng(cfg.seed, _HIDDEN))
    if cfg.feedback == "bernoulli":
        raise ValidationError("the mistake experiment needs exact or noisy feedback")
    noise = cfg.feedback_noise if cfg.feedback_noise is not None else eps / 3
    fb_mode = FeedbackMode.noisy_interval(noise) if cfg.feedback == "noisy" else FeedbackMode.exact()
    fb_rng = child_rng(cfg.seed, _FEEDBACK)
    eta = _learner_eta(cfg, 1.0)
    state = learn.initial_state(cfg.n, eta, 1.0, cfg.variant)
    adversary = Adversary(cfg, rho)
    checks = _make_checks(cfg)
    builder = RecordBuilder()
    for _ in range(cfg.T):
        e = adversary.next(state.iterate)
        truth = born_probability(e, rho)
        b = make_feedback(fb_mode, truth, fb_rng)
        new, pred, updated = learn.mistake_filtered_step(state, e, b, eps)
        if updated:
            checks.after_update(state, new, new.grad_sum - state.grad_sum)
        builder.add(pred, b, abs(pred - b), abs(truth - b), abs(pred - truth) > eps, updated)
        state = new
    mistakes = sum(r.mistake for r in builder.records)
    updates = sum(r.updated for r in builder.records)
    mb = learn.mistake_bound(cfg.variant, cfg.n, eps)
    summary = {
        "kind": "mistake",
        "config": cfg.to_dict(),
        "eta": eta,
        "feedback_noise": noise if cfg.feedback == "noisy" else 0.0,
        "T": cfg.T,
        "mistakes": mistakes,
        "updates": updates,
        "mistake_bound": mb,
        "mistakes_within_updates": bool(all(r.updated for r in builder.records if r.mistake)),
        "passed": bool(mistakes <= mb and updates <= mb),
        **checks.summary(),
    }
    return ExperimentResult("mistake", CSV_COLUMNS, [r.as_row() for r in builder.records], summary, builder.records)


def repeated_measurement_probe(rho: np.ndarray, e: np.ndarray, cfg: PostselConfig, reps: int,
                               start: AmplifiedHypothesis | None = None) -> tuple[list[bool], list[float]]:
    """Present the same measurement with exact feedback ``reps`` times.

    Returns the update flags and the acceptance probabilities of ``E*``; the
    acceptance never decreases and once a round is good all later rounds are.
    A degenerate ``E*`` (acceptance ~0) leaves the hypothesis unchanged.
    """
    n = int(round(math.log2(rho.shape[0])))
    h = start if start is not None else AmplifiedHypothesis.maximally_mixed(n, cfg.k)
    b = born_probability(e, rho)
    flags, accs = [], []
    for _ in range(reps):
        try:
            h, updated, acc = postselection_step(h, e, b, cfg)
        except DegeneratePostselectionError:
            updated, acc = False, 0.0
        flags.append(updated)
        accs.append(acc)
    return flags, accs


def run_postselect_experiment(cfg: ExperimentConfig, probe_reps: int = 20) -> ExperimentResult:
    eps = cfg.epsilon
    k = cfg.k if cfg.k is not None else default_k(cfg.n, eps)
    pcfg = PostselConfig(eps, k, cfg.feedback_noise, kraus=cfg.kraus)
    rho = _load_state(cfg.hidden_state, cfg.n, child_rng(cfg.seed, _HIDDEN))
    if cfg.adversary == "fixture":
        ms = _fixture_measurements(cfg)
        stream = [ms[i % len(ms)] for i in range(cfg.T)]
    elif cfg.adversary == "random":
        mrng = child_rng(cfg.seed, _MEASURE)
        stream = [random_measurement(cfg.n, mrng) for _ in range(cfg.T)]
    else:
        raise ValidationError("the postselection experiment supports random and fixture adversaries")
    fb_mode = FeedbackMode.noisy_interval(pcfg.feedback_tolerance)
    run = run_postselection_learner(rho, stream, fb_mode, pcfg, child_rng(cfg.seed, _FEEDBACK),
                                    on_degenerate="skip")
    probe_e = random_measurement(cfg.n, child_rng(cfg.seed, _INSTANCE))
    flags, accs = repeated_measurement_probe(rho, probe_e, pcfg, probe_reps, run.final)
    probe_monotone = all(a <= b + 1e-12 for a, b in zip(accs, accs[1:]))
    probe_prefix = all(not (not a and b) for a, b in zip(flags, flags[1:]))
    max_gap = max(run.good_gaps, default=0.0)
    claim_ok = max_gap <= 2 * eps / 3 + 1e-9
    summary = {
        "kind": "postselect",
        "config": cfg.to_dict(),
        "k": k,
        "feedback_tolerance": pcfg.feedback_tolerance,
        "T": cfg.T,
        "updates": run.update_count,
        "mistakes": run.mistake_count,
        "good_rounds": len(run.good_gaps),
        "degenerate_rounds": len(run.degenerate_rounds),
        "max_good_gap": max_gap,
        "good_gap_bound": 2 * eps / 3,
        "claim_ii_ok": bool(claim_ok),
        "max_symmetry_defect": max(run.symmetry_defects, default=0.0),
        "probe_updates": int(sum(flags)),
        "probe_acceptance_monotone": bool(probe_monotone),
        "probe_updates_prefix": bool(probe_prefix),
        "passed": bool(claim_ok and probe_monotone and probe_prefix),
    }
    return ExperimentResult("postselect", CSV_COLUMNS, [r.as_row() for r in run.records], summary, run.records)


def near_accepting_instance(n: int, k: int, eps_max: float, rng: np.random.Generator):
    """A state and ``k`` measurements each accepting it with probability at least ``1 - eps_max``."""
    d = 2**n
    if rng.random() < 0.5:
        phi = random_density(n, rng)
        ms = []
        for _ in range(k):
            delta = rng.uniform(0.0, eps_max)
            ms.append(np.eye(d) - delta * random_measurement(n, rng))
        return phi, ms
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi /= np.linalg.norm(psi)
    phi = np.outer(psi, psi.conj())
    ms = []
    for _ in range(k):
        g = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        tau = 1.0
        while True:
            chi = psi + tau * g
            chi /= np.linalg.norm(chi)
            if 1.0 - abs(np.vdot(chi, psi)) ** 2 <= eps_max:
                break
            tau /= 2
        ms.append(np.outer(chi, chi.conj()))
    return phi, ms


def run_union_bound_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    columns = ("instance", "dim", "k", "eps_max", "success_prob", "trace_dist", "dilated_success_prob",
               "dilated_trace_dist", "success_floor", "dist_ceiling", "bounds_ok")
    rows = []
    for i in range(cfg.instances):
        rng = child_rng(cfg.seed, _INSTANCE, i)
        n = int(rng.integers(1, cfg.n + 1))
        k = int(rng.integers(1, (cfg.k or 5) + 1))
        eps_max = float(rng.uniform(0.0, 0.05))
        phi, ms = near_accepting_instance(n, k, eps_max, rng)
        res = union_bound_check(phi, ms)
        dil = union_bound_check(phi, ms, dilated=True)
        root = math.sqrt(res.k * res.eps_max)
        rows.append((i, 2**n, res.k, res.eps_max, res.success_prob, res.trace_dist, dil.success_prob,
                     dil.trace_dist, 1 - 2 * root, 4 * root, res.bounds_ok and dil.bounds_ok))
    summary = {
        "kind": "union-bound",
        "config": cfg.to_dict(),
        "instances": len(rows),
        "violations": sum(not r[-1] for r in rows),
        "max_eps": max(r[3] for r in rows),
        "passed": all(r[-1] for r in rows),
    }
    return ExperimentResult("union-bound", columns, rows, summary)


def fixture_codes() -> dict[str, bounds.RandomAccessCode]:
    """The perfect one-bit code and an uninformative two-bit code."""
    zero, one = np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)
    perfect = bounds.RandomAccessCode.nonadaptive(1, 1, {"0": zero, "1": one}, [one])
    half = np.eye(2, dtype=complex) / 2
    enc = {y: maximally_mixed(1) for y in ("00", "01", "10", "11")}
    uninformative = bounds.RandomAccessCode.nonadaptive(1, 2, enc, [half, half])
    return {"perfect": perfect, "uninformative": uninformative}


def run_rac_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    columns = ("instance", "n", "k", "y", "p_emp", "learner_loss", "regret_bound", "inequality_ok")
    k = cfg.k or 2
    rows = []
    for name, code in fixture_codes().items():
        res = bounds.rac_adversary_run(code, cfg.eta)
        rows.append((name, code.n, code.k, res.y, res.p_emp, res.learner_loss, res.regret_bound, res.inequality_ok))
    for i in range(cfg.instances):
        rng = child_rng(cfg.seed, _INSTANCE, i)
        code = bounds.random_code(cfg.n, k, rng, adaptive=bool(i % 2))
        res = bounds.rac_adversary_run(code, cfg.eta)
        rows.append((str(i), cfg.n, k, res.y, res.p_emp, res.learner_loss, res.regret_bound, res.inequality_ok))
    summary = {
        "kind": "rac",
        "config": cfg.to_dict(),
        "codes": len(rows),
        "violations": sum(not r[-1] for r in rows),
        "min_qubits_for_perfect_code": bounds.rac_min_qubits(k, 0.0),
        "passed": all(r[-1] for r in rows),
    }
    return ExperimentResult("rac", columns, rows, summary)


RUNNERS = {
    "regret": run_regret_experiment,
    "mistake": run_mistake_experiment,
    "postselect": run_postselect_experiment,
    "union-bound": run_union_bound_experiment,
    "rac": run_rac_experiment,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.kind](cfg)


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def summary_text(summary: dict) -> str:
    return json.dumps(_jsonable(summary), sort_keys=True, indent=2) + "\n"


def write_outputs(result: ExperimentResult, outdir: str | Path) -> tuple[Path, Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / "records.csv", out / "summary.json"
    csv_path.write_text(csv_text(result.columns, result.rows))
    json_path.write_text(summary_text(result.summary))
    return csv_path, json_path


def read_records_csv(text: str) -> list[TrialRecord]:
    lines = text.strip().splitlines()
    if tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise ValidationError("not a trial-record CSV")
    out = []
    for line in lines[1:]:
        f = line.split(",")
        out.append(TrialRecord(int(f[0]), *map(float, f[1:7]), f[7] == "1", f[8] == "1"))
    return out
