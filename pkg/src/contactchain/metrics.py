"""Success rate, contact error and success steps over batches of trials."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .coc import ContactType
from .errors import EmptyBatch, MismatchedIds, NoEligiblePairs
from .executor import TrialLog
from .sceneplan import PlanEntry
from .taskparser import StepOutcome

LEVELS = ("simple", "mid", "hard")
NOT_CONTACT_CLEARANCE = 0.3


def classify_level(entry: PlanEntry) -> str:
    """Multi-object plans are hard; otherwise up to 3 steps is simple, longer is mid."""
    if len(entry.chain.objects) > 1:
        return "hard"
    return "simple" if len(entry.chain) <= 3 else "mid"


def _require(trials: Sequence[TrialLog]) -> None:
    if not trials:
        raise EmptyBatch("metrics need at least one trial")


def success_rate(trials: Sequence[TrialLog]) -> float:
    _require(trials)
    return 100.0 * sum(bool(t.succeeded) for t in trials) / len(trials)


def pair_error(contact: ContactType, distance: float, clamp: str = "max") -> float | None:
    """Per-pair error; None for pairs that do not count (``not care``).

    ``clamp="min"`` applies ``min(0.3 - d, 0)`` to not-contact pairs instead of
    the default ``max(0.3 - d, 0)``.
    """
    if contact is ContactType.CONTACT:
        return distance
    if contact is ContactType.NOT_CONTACT:
        gap = NOT_CONTACT_CLEARANCE - distance
        return max(gap, 0.0) if clamp == "max" else min(gap, 0.0)
    return None


def _outcome_errors(outcomes: Iterable[StepOutcome], clamp: str) -> list[float]:
    errs = []
    for outcome in outcomes:
        for e in outcome.pair_errors:
            v = pair_error(e.contact, e.distance, clamp)
            if v is not None:
                errs.append(v)
    return errs


def contact_error(trials: Sequence[TrialLog], clamp: str = "max") -> float:
    """Mean pair error at each attempted step's final frame."""
    _require(trials)
    if clamp not in ("max", "min"):
        raise ValueError("clamp must be 'max' or 'min'")
    errs = [e for t in trials for e in _outcome_errors(t.per_step_outcome, clamp)]
    if not errs:
        raise NoEligiblePairs("no contact or not-contact pairs were measured")
    return math.fsum(errs) / len(errs)


def success_steps(trials: Sequence[TrialLog]) -> float:
    _require(trials)
    return sum(t.steps_completed for t in trials) / len(trials)


@dataclass(frozen=True)
class LevelMetrics:
    success_rate: float
    contact_error: float | None
    success_steps: float
    n_trials: int

    @classmethod
    def of(cls, trials: Sequence[TrialLog], clamp: str = "max") -> "LevelMetrics":
        try:
            err: float | None = contact_error(trials, clamp)
        except NoEligiblePairs:
            err = None
        return cls(success_rate(trials), err, success_steps(trials), len(trials))


@dataclass(frozen=True)
class EvalReport:
    overall: LevelMetrics
    per_level: Mapping[str, LevelMetrics] = field(default_factory=dict)

    @property
    def success_rate(self) -> float:
        return self.overall.success_rate

    @property
    def contact_error(self) -> float | None:
        return self.overall.contact_error

    @property
    def success_steps(self) -> float:
        return self.overall.success_steps

    @property
    def n_trials(self) -> int:
        return self.overall.n_trials

    def to_dict(self) -> dict:
        def row(m: LevelMetrics) -> dict:
            return {
                "success_rate": m.success_rate,
                "contact_error": m.contact_error,
                "success_steps": m.success_steps,
                "n_trials": m.n_trials,
            }

        return {"overall": row(self.overall), "per_level": {k: row(v) for k, v in self.per_level.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        header = ("Level", "Success Rate (%)", "Contact Error", "Success Steps", "Trials")
        rows = [header]
        for name, m in [*self.per_level.items(), ("overall", self.overall)]:
            err = "-" if m.contact_error is None else f"{m.contact_error:.3f}"
            rows.append((name, f"{m.success_rate:.1f}", err, f"{m.success_steps:.1f}", str(m.n_trials)))
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(r, widths)))
                 for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def build_report(trials: Sequence[TrialLog], entries: Iterable[PlanEntry], clamp: str = "max") -> EvalReport:
    """Overall and per-level metrics; trials are joined to entries by plan id."""
    _require(trials)
    by_id = {e.entry_id: e for e in entries}
    missing = sorted({t.plan_id for t in trials if t.plan_id not in by_id})
    if missing:
        raise MismatchedIds(f"trials without a matching entry: {', '.join(missing)}")
    buckets: dict[str, list[TrialLog]] = {}
    for t in trials:
        buckets.setdefault(classify_level(by_id[t.plan_id]), []).append(t)
    per_level = {lvl: LevelMetrics.of(buckets[lvl], clamp) for lvl in LEVELS if lvl in buckets}
    return EvalReport(LevelMetrics.of(trials, clamp), per_level)
