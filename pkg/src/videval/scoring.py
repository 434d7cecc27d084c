"""Matching-node scoring, MCQ accuracy, and report aggregations.

All functions are pure; annotations (ground-truth keyframes and binary summary
verdicts) come in as plain data and the harness only computes means, it never
judges summary semantics itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import EmptyVector, MissingCondition, NoRecords
from .parsing import KeyframeEntry

ANSWERED_OUTCOMES = ("answered_correct", "answered_wrong")


@dataclass
class MatchVector:
    """Per-output match indicators for one scenario (keyframe or summary)."""

    scenario: str
    matches: list[bool]


@dataclass
class RowTriple:
    """One (with transcript, without transcript) row; delta is exact."""

    with_value: float
    without_value: float

    @property
    def delta(self) -> float:
        return self.with_value - self.without_value


@dataclass
class CompletenessRow:
    total: int
    answered: int
    correct: int
    oom: int = 0
    unanswered: int = 0
    invalid_output: int = 0

    @property
    def answered_pct(self) -> float:
        return self.answered / self.total if self.total else 0.0

    @property
    def correct_pct(self) -> float:
        return self.correct / self.answered if self.answered else 0.0


@dataclass
class ScoreReport:
    overall_accuracy: float
    by_task_type: dict[str, RowTriple] = field(default_factory=dict)
    task_average: RowTriple | None = None
    by_duration: dict[str, RowTriple] = field(default_factory=dict)
    duration_average: RowTriple | None = None
    by_model: dict[str, RowTriple] = field(default_factory=dict)
    model_average: RowTriple | None = None
    completeness: dict[str, CompletenessRow] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


@dataclass
class ReportSpec:
    """Row metadata for aggregation: items supply task type and duration."""

    items: list
    task_order: list[str] | None = None
    duration_order: tuple[str, ...] = ("short", "medium", "long")
    model_order: list[str] | None = None


def matching_node_score(vector: MatchVector) -> float:
    """Mean indicator over the vector's entries."""
    n = len(vector.matches)
    if n == 0:
        raise EmptyVector("match vector has no entries")
    return sum(1 for m in vector.matches if m) / n


def keyframe_match(pred: KeyframeEntry, truth: KeyframeEntry, tolerance_s: int = 0) -> bool:
    """True when the predicted timestamp is within tolerance of the truth."""
    if tolerance_s < 0:
        raise ValueError("tolerance must be non-negative")
    return abs(pred.timestamp_s - truth.timestamp_s) <= tolerance_s


def match_keyframe_lists(
    predicted: list[KeyframeEntry],
    truth: list[KeyframeEntry],
    tolerance_s: int = 0,
    mode: str = "any",
) -> bool:
    """Per-output keyframe verdict.

    mode "any": at least one predicted entry lands within tolerance of some
    ground-truth entry; mode "all": every ground-truth entry is covered.
    """
    if mode not in ("any", "all"):
        raise ValueError(f"bad mode: {mode}")
    if not truth:
        return False
    covered = [
        any(keyframe_match(p, t, tolerance_s) for p in predicted) for t in truth
    ]
    return all(covered) if mode == "all" else any(covered)


def build_match_vector(
    scenario: str,
    outputs: dict[str, "object"],
    annotations: dict[str, dict],
    tolerance_s: int = 0,
    mode: str = "any",
    model: str | None = None,
) -> MatchVector:
    """Assemble a match vector over the valid outputs that have annotations.

    outputs maps video_id -> ParsedVideoOutput. For the keyframe scenario the
    verdict is computed here; for the summary scenario the annotation's binary
    verdict (per model) is taken as-is.
    """
    matches: list[bool] = []
    for video_id, output in outputs.items():
        if not getattr(output, "valid", False):
            continue
        ann = annotations.get(video_id)
        if ann is None:
            continue
        if scenario == "keyframe":
            truth = [
                KeyframeEntry(int(ts), str(caption))
                for ts, caption in (ann.get("keyframes") or [])
            ]
            matches.append(
                match_keyframe_lists(output.keyframes, truth, tolerance_s, mode)
            )
        elif scenario == "summary":
            verdicts = ann.get("summary") or {}
            if model is None or model not in verdicts:
                continue
            matches.append(bool(verdicts[model]))
        else:
            raise ValueError(f"bad scenario: {scenario}")
    return MatchVector(scenario=scenario, matches=matches)


def mcq_accuracy(records: Iterable) -> tuple[float, float]:
    """(answered/total, correct/answered) over MCQ run records.

    The correctness denominator is the answered records, matching how a run
    can answer 37% of items yet be right on 58.73% of those it answered.
    """
    total = answered = correct = 0
    for record in records:
        total += 1
        if record.outcome in ANSWERED_OUTCOMES:
            answered += 1
            if record.outcome == "answered_correct":
                correct += 1
    if total == 0:
        raise NoRecords("no records supplied")
    answered_pct = answered / total
    correct_pct = correct / answered if answered else 0.0
    return answered_pct, correct_pct


def completeness_counts(records: Iterable) -> CompletenessRow:
    row = CompletenessRow(total=0, answered=0, correct=0)
    for record in records:
        row.total += 1
        if record.outcome in ANSWERED_OUTCOMES:
            row.answered += 1
        if record.outcome == "answered_correct":
            row.correct += 1
        elif record.outcome == "oom":
            row.oom += 1
        elif record.outcome == "unanswered":
            row.unanswered += 1
        elif record.outcome == "invalid_output":
            row.invalid_output += 1
    return row


def _accuracy(records: list) -> float | None:
    answered = sum(1 for r in records if r.outcome in ANSWERED_OUTCOMES)
    if answered == 0:
        return None
    correct = sum(1 for r in records if r.outcome == "answered_correct")
    return correct / answered


def _mean_triple(rows: dict[str, RowTriple]) -> RowTriple | None:
    if not rows:
        return None
    n = len(rows)
    return RowTriple(
        with_value=sum(t.with_value for t in rows.values()) / n,
        without_value=sum(t.without_value for t in rows.values()) / n,
    )


def aggregate(spec: ReportSpec, records: Iterable) -> ScoreReport:
    """Build the full score report: per-task, per-duration, and per-model rows
    with (with, without, delta) triples, average rows as unweighted means of
    the listed rows, plus per-condition completeness.
    """
    records = list(records)
    meta = {item.question_id: item for item in spec.items}
    mcq = [r for r in records if r.request_kind == "mcq"]

    warnings: list[str] = []
    known = [r for r in mcq if r.item_ref in meta]
    dropped = len(mcq) - len(known)
    if dropped:
        warnings.append(f"{dropped} record(s) reference unknown items and were skipped")

    with_side = [r for r in known if r.condition.with_transcript]
    without_side = [r for r in known if not r.condition.with_transcript]
    if not with_side or not without_side:
        raise MissingCondition("need records from both transcript conditions")

    def rows_for(key_fn, order: list[str] | None) -> dict[str, RowTriple]:
        keys = order or sorted({key_fn(r) for r in known})
        rows: dict[str, RowTriple] = {}
        for key in keys:
            a = _accuracy([r for r in with_side if key_fn(r) == key])
            b = _accuracy([r for r in without_side if key_fn(r) == key])
            if a is None or b is None:
                warnings.append(f"row {key!r} lacks answered records on one side; skipped")
                continue
            rows[key] = RowTriple(a, b)
        return rows

    durations_present = {meta[r.item_ref].duration_class for r in known}
    by_task = rows_for(lambda r: meta[r.item_ref].task_type, spec.task_order)
    by_duration = rows_for(
        lambda r: meta[r.item_ref].duration_class,
        [d for d in spec.duration_order if d in durations_present],
    )
    by_model = rows_for(lambda r: r.condition.model_name, spec.model_order)

    overall = _accuracy(known)
    completeness = {}
    for label in sorted({r.condition.label() for r in records}):
        completeness[label] = completeness_counts(
            [r for r in records if r.condition.label() == label]
        )

    return ScoreReport(
        overall_accuracy=overall if overall is not None else 0.0,
        by_task_type=by_task,
        task_average=_mean_triple(by_task),
        by_duration=by_duration,
        duration_average=_mean_triple(by_duration),
        by_model=by_model,
        model_average=_mean_triple(by_model),
        completeness=completeness,
        warnings=warnings,
    )


def stated_average_warnings(
    label: str,
    rows: dict[str, RowTriple],
    stated: RowTriple,
    tolerance: float,
) -> list[str]:
    """Warn when a stated average row disagrees with the mean of its rows."""
    computed = _mean_triple(rows)
    if computed is None:
        return [f"{label}: no rows to average against the stated values"]
    warnings = []
    for name, got, want in (
        ("with", computed.with_value, stated.with_value),
        ("without", computed.without_value, stated.without_value),
        ("delta", computed.delta, stated.delta),
    ):
        if abs(got - want) > tolerance:
            warnings.append(
                f"{label}: stated average ({name}) {want:g} differs from the "
                f"mean of its rows {got:.4f} by more than {tolerance:g}"
            )
    return warnings


def claim_mismatch_warnings(
    label: str, claimed: RowTriple, reference: RowTriple, tolerance: float
) -> list[str]:
    """Warn when two stated claims about the same quantity disagree."""
    warnings = []
    for name, a, b in (
        ("with", claimed.with_value, reference.with_value),
        ("without", claimed.without_value, reference.without_value),
        ("delta", claimed.delta, reference.delta),
    ):
        if abs(a - b) > tolerance:
            warnings.append(
                f"{label}: claimed {name} value {a:g} disagrees with {b:g} "
                f"beyond {tolerance:g}"
            )
    return warnings
