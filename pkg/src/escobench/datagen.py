"""Generate the three benchmark datasets from a frozen taxonomy.

Tasks:

* ``ecrc`` — joint entity + relation classification. One example per stored
  skill->occupation triple; three masks (skill type, relation, occupation
  type); positives only.
* ``el`` — entity linking. One positive per (entity, alternative label)
  pair, plus sampled negatives that re-pair entities with mentions drawn
  from other entities.
* ``qa`` — yes/no question answering over entity descriptions, with an
  instruction prefix; negatives pair an entity with another entity's
  description.

Negative sampling rejects any pair that is actually true (an entity with one
of its own labels, or its own description text): accidental positives
mislabeled as negatives would corrupt the gold labels. Sampled negatives are
also distinct, so example ids stay collision-free.

All randomness is seeded; example lists are canonically sorted by example id,
so identical (taxonomy, config) input yields byte-identical exports.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .jsonio import SCHEMA_VERSION, read_jsonl, write_jsonl
from .promptkit import (
    MaskSlot,
    PromptTemplate,
    RenderedPrompt,
    Verbalizer,
    load_template,
    load_verbalizer,
    render,
)
from .taxonomy import Entity, Taxonomy

# Above this many candidate pairs, negative sampling switches from exact
# enumeration (sample without replacement from all valid pairs) to seeded
# rejection sampling. Both paths are deterministic for a given input.
_EXACT_ENUMERATION_LIMIT = 2_000_000


class Task(Enum):
    ECRC = "ecrc"
    EL = "el"
    QA = "qa"


class DatagenError(Exception):
    pass


class InsufficientEntitiesForNegativesError(DatagenError):
    pass


class NoDescriptionsError(DatagenError):
    pass


class DatasetFormatError(DatagenError):
    """A dataset file does not conform to the export schema."""


@dataclass(frozen=True)
class Provenance:
    """Where an example came from: subject entity, object entity or mention
    text, and the relation/description source string."""

    subject: str
    object: str
    source: str


@dataclass(frozen=True)
class PromptExample:
    example_id: str
    task: Task
    rendered: RenderedPrompt
    polarity: str  # "positive" | "negative"
    provenance: Provenance

    def gold(self, mask_index: int) -> str | None:
        for slot in self.rendered.mask_slots:
            if slot.index == mask_index:
                return slot.gold
        return None


@dataclass(frozen=True)
class GenConfig:
    seed: int
    qa_positive_count: int | None = None
    el_include_preferred_label_synonyms: bool = False
    negative_ratio: float = 1.0

    def __post_init__(self) -> None:
        if self.negative_ratio <= 0:
            raise ValueError("negative_ratio must be > 0")
        if self.qa_positive_count is not None and self.qa_positive_count < 1:
            raise ValueError("qa_positive_count must be >= 1 when set")


@dataclass(frozen=True)
class TaskPreset:
    """Template plus per-mask verbalizers for one task."""

    name: str
    template: PromptTemplate
    mask_spaces: dict[int, Verbalizer]

    @property
    def verbalizer_table(self) -> dict[str, dict[str, str]]:
        return {v.name: dict(v.class_to_word) for v in self.mask_spaces.values()}


def default_preset(task: Task) -> TaskPreset:
    if task is Task.ECRC:
        entity_type = load_verbalizer("entity_type")
        return TaskPreset(
            "ecrc",
            load_template("ecrc"),
            {1: entity_type, 2: load_verbalizer("relation"), 3: entity_type},
        )
    if task is Task.EL:
        return TaskPreset("el", load_template("el"), {1: load_verbalizer("synonym")})
    return TaskPreset("qa", load_template("qa"), {1: load_verbalizer("yes_no")})


def make_example_id(task: Task, preset: str, provenance: Provenance) -> str:
    key = json.dumps(
        [task.value, preset, provenance.subject, provenance.object, provenance.source],
        ensure_ascii=False,
    )
    return hashlib.sha256(key.encode("utf-8")).hexdigest()[:24]


def _example(
    task: Task,
    preset: TaskPreset,
    bindings: Mapping[str, str],
    golds: Mapping[int, str],
    polarity: str,
    provenance: Provenance,
) -> PromptExample:
    rendered = render(preset.template, bindings, preset.mask_spaces, golds)
    return PromptExample(
        example_id=make_example_id(task, preset.name, provenance),
        task=task,
        rendered=rendered,
        polarity=polarity,
        provenance=provenance,
    )


# -- EC + RC ------------------------------------------------------------------


def gen_ecrc(
    taxonomy: Taxonomy, config: GenConfig, preset: TaskPreset | None = None
) -> list[PromptExample]:
    """One positive example per stored triple; no negatives."""
    taxonomy.require_frozen()
    preset = preset or default_preset(Task.ECRC)
    examples = []
    for triple in taxonomy.query_triples():
        skill = taxonomy.get(triple.subject)
        occupation = taxonomy.get(triple.object)
        examples.append(
            _example(
                Task.ECRC,
                preset,
                {"skill": skill.preferred_label, "occupation": occupation.preferred_label},
                {1: "Skill", 2: triple.predicate.value, 3: "Occupation"},
                "positive",
                Provenance(triple.subject, triple.object, triple.predicate.value),
            )
        )
    examples.sort(key=lambda e: e.example_id)
    return examples


# -- negative pair sampling ----------------------------------------------------


def _sample_distinct_pairs(
    rng: random.Random,
    subjects: Sequence[str],
    objects: Sequence[str],
    is_valid,
    count: int,
    what: str,
) -> list[tuple[str, str]]:
    """Sample ``count`` distinct (subject, object) pairs satisfying ``is_valid``.

    Enumerates the valid set exactly when small enough, otherwise falls back
    to capped rejection sampling. Deterministic for a given rng state.
    """
    if count == 0:
        return []
    unique_subjects = sorted(set(subjects))
    unique_objects = sorted(set(objects))
    if len(unique_subjects) * len(unique_objects) <= _EXACT_ENUMERATION_LIMIT:
        valid = [
            (s, o) for s in unique_subjects for o in unique_objects if is_valid(s, o)
        ]
        if len(valid) < count:
            raise InsufficientEntitiesForNegativesError(
                f"{what}: need {count} negative pairs but only {len(valid)} are possible"
            )
        return rng.sample(valid, count)

    chosen: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    attempts_left = 200 * count + 10_000
    while len(chosen) < count:
        if attempts_left <= 0:
            raise InsufficientEntitiesForNegativesError(
                f"{what}: rejection sampling exhausted after "
                f"{len(chosen)}/{count} negative pairs"
            )
        attempts_left -= 1
        pair = (rng.choice(subjects), rng.choice(objects))
        if pair in seen or not is_valid(*pair):
            continue
        seen.add(pair)
        chosen.append(pair)
    return chosen


# -- EL -----------------------------------------------------------------------


def gen_el(
    taxonomy: Taxonomy, config: GenConfig, preset: TaskPreset | None = None
) -> list[PromptExample]:
    """Entity-linking pairs: positives from alternative labels, shuffled negatives."""
    taxonomy.require_frozen()
    preset = preset or default_preset(Task.EL)

    positives: list[tuple[Entity, str]] = []
    for entity in taxonomy.entities():
        for alt in entity.alt_labels:
            positives.append((entity, alt))
        if config.el_include_preferred_label_synonyms:
            positives.append((entity, entity.preferred_label))
    if not positives:
        return []

    true_labels = {e.id: set(e.labels) for e in taxonomy.entities()}
    subjects = [e.id for e, _ in positives]
    mentions = [m for _, m in positives]
    n_neg = round(config.negative_ratio * len(positives))

    if n_neg > 0 and len(set(subjects)) < 2:
        raise InsufficientEntitiesForNegativesError(
            "entity-linking negatives need mentions from at least 2 distinct entities"
        )
    rng = random.Random(f"{config.seed}:el:neg")
    pairs = _sample_distinct_pairs(
        rng,
        subjects,
        mentions,
        lambda entity_id, mention: mention not in true_labels[entity_id],
        n_neg,
        "entity linking",
    )

    examples = []
    for entity, mention in positives:
        examples.append(
            _example(
                Task.EL,
                preset,
                {"entity": entity.preferred_label, "mention": mention},
                {1: "alternativeLabel"},
                "positive",
                Provenance(entity.id, mention, "alternativeLabel"),
            )
        )
    for entity_id, mention in pairs:
        entity = taxonomy.get(entity_id)
        examples.append(
            _example(
                Task.EL,
                preset,
                {"entity": entity.preferred_label, "mention": mention},
                {1: "noAlternativeLabel"},
                "negative",
                Provenance(entity_id, mention, "noAlternativeLabel"),
            )
        )
    examples.sort(key=lambda e: e.example_id)
    return examples


# -- QA -----------------------------------------------------------------------


def gen_qa(
    taxonomy: Taxonomy, config: GenConfig, preset: TaskPreset | None = None
) -> list[PromptExample]:
    """Yes/no description questions: each entity against its own or another's
    description."""
    taxonomy.require_frozen()
    preset = preset or default_preset(Task.QA)

    described = [e for e in taxonomy.entities() if e.description is not None]
    if not described:
        raise NoDescriptionsError("taxonomy has no entity descriptions")

    pos_entities = described
    if config.qa_positive_count is not None and config.qa_positive_count < len(described):
        rng_pos = random.Random(f"{config.seed}:qa:pos")
        pos_entities = rng_pos.sample(described, config.qa_positive_count)
        pos_entities.sort(key=lambda e: e.id)

    n_neg = round(config.negative_ratio * len(pos_entities))
    all_ids = [e.id for e in taxonomy.entities()]
    donor_ids = [e.id for e in described]
    descriptions = {e.id: e.description for e in taxonomy.entities()}

    rng = random.Random(f"{config.seed}:qa:neg")
    pairs = _sample_distinct_pairs(
        rng,
        all_ids,
        donor_ids,
        lambda entity_id, donor_id: (
            entity_id != donor_id and descriptions[entity_id] != descriptions[donor_id]
        ),
        n_neg,
        "question answering",
    )

    examples = []
    for entity in pos_entities:
        examples.append(
            _example(
                Task.QA,
                preset,
                {"entity": entity.preferred_label, "description": entity.description},
                {1: "yes"},
                "positive",
                Provenance(entity.id, entity.id, "description"),
            )
        )
    for entity_id, donor_id in pairs:
        entity = taxonomy.get(entity_id)
        examples.append(
            _example(
                Task.QA,
                preset,
                {"entity": entity.preferred_label, "description": descriptions[donor_id]},
                {1: "no"},
                "negative",
                Provenance(entity_id, donor_id, "description"),
            )
        )
    examples.sort(key=lambda e: e.example_id)
    return examples


GENERATORS = {Task.ECRC: gen_ecrc, Task.EL: gen_el, Task.QA: gen_qa}


# -- statistics ----------------------------------------------------------------


@dataclass(frozen=True)
class DatasetStats:
    total: int
    by_polarity: dict[str, int]
    by_mask_gold: dict[int, dict[str, int]]

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "by_polarity": dict(sorted(self.by_polarity.items())),
            "by_mask_gold": {
                str(i): dict(sorted(counts.items()))
                for i, counts in sorted(self.by_mask_gold.items())
            },
        }


def dataset_stats(examples: Sequence[PromptExample]) -> DatasetStats:
    """Per-polarity and per-mask gold-class counts; each map partitions the list."""
    by_polarity: dict[str, int] = {}
    by_mask_gold: dict[int, dict[str, int]] = {}
    for example in examples:
        by_polarity[example.polarity] = by_polarity.get(example.polarity, 0) + 1
        for slot in example.rendered.mask_slots:
            if slot.gold is None:
                continue
            counts = by_mask_gold.setdefault(slot.index, {})
            counts[slot.gold] = counts.get(slot.gold, 0) + 1
    return DatasetStats(len(examples), by_polarity, by_mask_gold)


# -- dataset files ---------------------------------------------------------------

# Dataset JSONL layout: a header record first (schema version, task label and
# the verbalizer table for all referenced class spaces), then one example
# record per line. The header makes each file self-contained for model-side
# consumers.


def example_to_record(example: PromptExample) -> dict:
    return {
        "record": "example",
        "example_id": example.example_id,
        "task": example.task.value,
        "text": example.rendered.text,
        "masks": [
            {"index": s.index, "class_space": s.class_space, "gold": s.gold}
            for s in example.rendered.mask_slots
        ],
        "polarity": example.polarity,
        "provenance": {
            "subject": example.provenance.subject,
            "object": example.provenance.object,
            "source": example.provenance.source,
        },
    }


def example_from_record(record: dict) -> PromptExample:
    try:
        slots = tuple(
            MaskSlot(int(m["index"]), m["class_space"], m.get("gold"))
            for m in sorted(record["masks"], key=lambda m: int(m["index"]))
        )
        prov = record["provenance"]
        return PromptExample(
            example_id=record["example_id"],
            task=Task(record["task"]),
            rendered=RenderedPrompt(record["text"], slots),
            polarity=record["polarity"],
            provenance=Provenance(prov["subject"], prov["object"], prov["source"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise DatasetFormatError(f"malformed example record: {exc}") from exc


def write_dataset(
    path: str | Path,
    examples: Iterable[PromptExample],
    verbalizers: Mapping[str, Mapping[str, str]],
    task_label: str,
    extra_header: Mapping | None = None,
) -> None:
    header = {
        "record": "header",
        "schema_version": SCHEMA_VERSION,
        "task": task_label,
        "verbalizers": {name: dict(table) for name, table in verbalizers.items()},
    }
    if extra_header:
        header.update(extra_header)
    write_jsonl(path, [header] + [example_to_record(e) for e in examples])


def read_dataset(path: str | Path) -> tuple[list[PromptExample], dict]:
    """Read a dataset file, returning (examples, header)."""
    try:
        records = read_jsonl(path)
    except ValueError as exc:
        raise DatasetFormatError(str(exc)) from exc
    if not records:
        raise DatasetFormatError(f"{path}: empty dataset file (missing header)")
    header = records[0]
    if header.get("record") != "header":
        raise DatasetFormatError(f"{path}: first record must be the dataset header")
    if header.get("schema_version") != SCHEMA_VERSION:
        raise DatasetFormatError(
            f"{path}: unsupported schema_version {header.get('schema_version')!r}"
        )
    examples = []
    seen: set[str] = set()
    for record in records[1:]:
        example = example_from_record(record)
        if example.example_id in seen:
            raise DatasetFormatError(f"{path}: duplicate example_id {example.example_id}")
        seen.add(example.example_id)
        examples.append(example)
    return examples, header
