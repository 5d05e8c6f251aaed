"""Per-iteration log rows shared by every learner run."""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields

CSV_COLUMNS = ("t", "prediction", "feedback", "loss", "cum_loss", "cum_comparator_loss",
               "cum_regret", "mistake", "updated")


@dataclass(frozen=True)
class TrialRecord:
    t: int
    prediction: float
    feedback: float
    loss: float
    cum_loss: float
    cum_comparator_loss: float
    cum_regret: float
    mistake: bool
    updated: bool

    def as_row(self) -> tuple:
        return astuple(self)


assert tuple(f.name for f in fields(TrialRecord)) == CSV_COLUMNS


class RecordBuilder:
    """Accumulates rows, keeping the cumulative columns as running sums."""

    def __init__(self):
        self.records: list[TrialRecord] = []
        self.cum_loss = 0.0
        self.cum_comparator_loss = 0.0

    def add(self, prediction, feedback, loss, comparator_loss, mistake, updated) -> TrialRecord:
        self.cum_loss += loss
        self.cum_comparator_loss += comparator_loss
        rec = TrialRecord(len(self.records) + 1, float(prediction), float(feedback), float(loss),
                          self.cum_loss, self.cum_comparator_loss,
                          self.cum_loss - self.cum_comparator_loss, bool(mistake), bool(updated))
        self.records.append(rec)
        return rec


def prefix_sums_consistent(records, comparator_losses=None, tol: float = 1e-9) -> bool:
    """Check that the cumulative columns are prefix sums of the per-row losses."""
    cum = 0.0
    for r in records:
        cum += r.loss
        if abs(cum - r.cum_loss) > tol:
            return False
        if abs(r.cum_loss - r.cum_comparator_loss - r.cum_regret) > tol:
            return False
    if comparator_losses is not None:
        cum = 0.0
        for r, c in zip(records, comparator_losses):
            cum += c
            if abs(cum - r.cum_comparator_loss) > tol:
                return False
    return True
