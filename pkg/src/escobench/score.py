"""Score prediction files against gold labels.

A prediction assigns one class per mask of each example. Scoring groups the
(gold, predicted) pairs of a run by *mask role*, where a role is the mask's
class space: the two entity-type masks of the joint entity/relation task pool
into a single entity role, its relation mask forms the relation role, and the
binary tasks have one role each.

Per role the metric is macro-F1: the unweighted mean over classes of the
harmonic mean of precision and recall, computed over the classes observed in
golds or predictions. A class with an empty predicted or gold set scores 0
for the undefined ratio and the run is flagged. The combined run score is
the unweighted mean over roles. Aggregation across runs reports mean and
sample standard deviation (n-1; a single run reports std 0 and is flagged).
"""

from __future__ import annotations

import statistics
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .datagen import PromptExample
from .jsonio import SCHEMA_VERSION, read_jsonl, write_jsonl


class ScoreError(Exception):
    pass


class MissingPredictionError(ScoreError):
    pass


class DuplicatePredictionError(ScoreError):
    pass


class UnknownExampleError(ScoreError):
    pass


class InvalidClassError(ScoreError):
    pass


class EmptyRunsError(ScoreError):
    pass


class PredictionFormatError(ScoreError):
    pass


@dataclass(frozen=True)
class PredictionRecord:
    example_id: str
    predictions: dict[int, str]  # mask index -> predicted class


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square gold-by-predicted count matrix for one mask role."""

    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def count(self, gold: str, predicted: str) -> int:
        return self.counts[self.labels.index(gold)][self.labels.index(predicted)]


@dataclass(frozen=True)
class RunScore:
    per_role: dict[str, float]
    combined: float
    n_examples: int
    flags: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "per_role": dict(sorted(self.per_role.items())),
            "combined": self.combined,
            "n_examples": self.n_examples,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class ScoreReport:
    runs: list[RunScore]
    per_role: dict[str, dict[str, float]]  # role -> {"mean", "std"}
    combined: dict[str, float]
    single_run: bool
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "n_runs": len(self.runs),
            "single_run": self.single_run,
            "runs": [r.as_dict() for r in self.runs],
            "aggregate": {
                "per_role": {r: dict(v) for r, v in sorted(self.per_role.items())},
                "combined": dict(self.combined),
            },
            "metadata": self.metadata,
        }


def _pair_up(
    eval_set: Sequence[PromptExample],
    predictions: Sequence[PredictionRecord],
    verbalizers: Mapping[str, Mapping[str, str]] | None,
) -> dict[str, list[tuple[str, str]]]:
    """Validate coverage and collect (gold, predicted) pairs per mask role."""
    by_id: dict[str, PredictionRecord] = {}
    for record in predictions:
        if record.example_id in by_id:
            raise DuplicatePredictionError(f"duplicate prediction for {record.example_id}")
        by_id[record.example_id] = record

    eval_ids = set(e.example_id for e in eval_set)
    unknown = set(by_id) - eval_ids
    if unknown:
        raise UnknownExampleError(f"predictions for unknown example(s): {sorted(unknown)[:5]}")

    pairs: dict[str, list[tuple[str, str]]] = {}
    for example in eval_set:
        record = by_id.get(example.example_id)
        if record is None:
            raise MissingPredictionError(f"no prediction for {example.example_id}")
        for slot in example.rendered.mask_slots:
            if slot.gold is None:
                raise ScoreError(
                    f"example {example.example_id} mask {slot.index} has no gold class"
                )
            predicted = record.predictions.get(slot.index)
            if predicted is None:
                raise MissingPredictionError(
                    f"{example.example_id}: no prediction for mask {slot.index}"
                )
            role = slot.class_space or f"mask_{slot.index}"
            if verbalizers is not None and slot.class_space is not None:
                space = verbalizers.get(slot.class_space)
                if space is None:
                    raise ScoreError(f"unknown class space {slot.class_space!r}")
                if predicted not in space:
                    raise InvalidClassError(
                        f"{example.example_id}: class {predicted!r} not in "
                        f"space {slot.class_space!r}"
                    )
            pairs.setdefault(role, []).append((slot.gold, predicted))
    return pairs


def _confusion_from_pairs(pairs: Sequence[tuple[str, str]]) -> ConfusionMatrix:
    labels = tuple(sorted({g for g, _ in pairs} | {p for _, p in pairs}))
    index = {label: i for i, label in enumerate(labels)}
    counts = [[0] * len(labels) for _ in labels]
    for gold, predicted in pairs:
        counts[index[gold]][index[predicted]] += 1
    return ConfusionMatrix(labels, tuple(tuple(row) for row in counts))


def _macro_f1(matrix: ConfusionMatrix) -> tuple[float, list[str]]:
    """Macro-F1 from a confusion matrix, flagging zero-division classes."""
    if not matrix.labels:
        return 0.0, ["empty-role"]
    flags = []
    f1s = []
    for i, label in enumerate(matrix.labels):
        tp = matrix.counts[i][i]
        gold_total = sum(matrix.counts[i])
        pred_total = sum(row[i] for row in matrix.counts)
        if gold_total == 0 or pred_total == 0:
            flags.append(f"zero-division:{label}")
        precision = tp / pred_total if pred_total else 0.0
        recall = tp / gold_total if gold_total else 0.0
        f1s.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)
    return sum(f1s) / len(f1s), flags


def confusion(
    eval_set: Sequence[PromptExample],
    predictions: Sequence[PredictionRecord],
    role: str,
    verbalizers: Mapping[str, Mapping[str, str]] | None = None,
) -> ConfusionMatrix:
    """Confusion matrix for one mask role."""
    pairs = _pair_up(eval_set, predictions, verbalizers)
    return _confusion_from_pairs(pairs.get(role, []))


def score_run(
    eval_set: Sequence[PromptExample],
    predictions: Sequence[PredictionRecord],
    verbalizers: Mapping[str, Mapping[str, str]] | None = None,
) -> RunScore:
    """Per-role macro-F1 plus the unweighted mean over roles."""
    pairs = _pair_up(eval_set, predictions, verbalizers)
    per_role: dict[str, float] = {}
    flags: list[str] = []
    for role in sorted(pairs):
        f1, role_flags = _macro_f1(_confusion_from_pairs(pairs[role]))
        per_role[role] = f1
        flags.extend(f"{role}:{flag}" for flag in role_flags)
    combined = sum(per_role.values()) / len(per_role) if per_role else 0.0
    return RunScore(per_role, combined, len(eval_set), tuple(flags))


def aggregate(run_scores: Sequence[RunScore], metadata: Mapping | None = None) -> ScoreReport:
    """Mean and sample standard deviation per role and combined, across runs."""
    if not run_scores:
        raise EmptyRunsError("no runs to aggregate")
    roles = set(run_scores[0].per_role)
    for run in run_scores[1:]:
        if set(run.per_role) != roles:
            raise ScoreError("runs report inconsistent mask roles")

    def mean_std(values: list[float]) -> dict[str, float]:
        return {
            "mean": statistics.fmean(values),
            "std": statistics.stdev(values) if len(values) > 1 else 0.0,
        }

    per_role = {role: mean_std([r.per_role[role] for r in run_scores]) for role in roles}
    combined = mean_std([r.combined for r in run_scores])
    return ScoreReport(
        runs=list(run_scores),
        per_role=per_role,
        combined=combined,
        single_run=len(run_scores) == 1,
        metadata=dict(metadata or {}),
    )


# -- prediction files ---------------------------------------------------------

# Prediction file layout: plain JSONL, one record per example:
#   {"example_id": "...", "predictions": {"1": "Skill", "2": "isEssentialFor"}}
# Unknown extra keys are ignored so producers may attach their own metadata.


def predictions_to_records(predictions: Sequence[PredictionRecord]) -> list[dict]:
    return [
        {
            "example_id": p.example_id,
            "predictions": {str(i): c for i, c in sorted(p.predictions.items())},
        }
        for p in predictions
    ]


def write_predictions(path: str | Path, predictions: Sequence[PredictionRecord]) -> None:
    write_jsonl(path, predictions_to_records(predictions))


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    try:
        records = read_jsonl(path)
    except ValueError as exc:
        raise PredictionFormatError(str(exc)) from exc
    predictions = []
    for record in records:
        try:
            predictions.append(
                PredictionRecord(
                    example_id=record["example_id"],
                    predictions={int(i): c for i, c in record["predictions"].items()},
                )
            )
        except (KeyError, ValueError, TypeError, AttributeError) as exc:
            raise PredictionFormatError(f"{path}: malformed prediction record: {exc}") from exc
    return predictions
