"""K-shot splitting, entity decontamination, eval-set sampling, task mixing.

The split pipeline per task: sample K train and K validation examples per
class (stratified on the relation class for the joint entity/relation task,
on the binary class otherwise), then sample repeated fixed-size evaluation
sets from the remainder. For the entity/relation task the remainder is first
decontaminated: any example sharing a subject or object entity with a
sampled train/validation example is removed, because one relation in
training leaks entity identity into others.

Entity-linking and QA pools need no entity filtering: every (entity, mention)
or (entity, description) pair is a unique example, so the id-level split
already separates train from test.

Everything is a pure function over immutable example lists; all randomness
is seeded and output orders are canonical.
"""

from __future__ import annotations

import logging
import random
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from .datagen import PromptExample, Task

logger = logging.getLogger(__name__)


class SplitError(Exception):
    pass


class InsufficientClassExamplesError(SplitError):
    def __init__(self, class_label: str, have: int, need: int):
        super().__init__(f"class {class_label!r} has {have} examples, need {need}")
        self.class_label = class_label
        self.have = have
        self.need = need


class EmptyPoolError(SplitError):
    pass


class EmptySubsetError(SplitError):
    pass


@dataclass(frozen=True)
class SplitConfig:
    seed: int
    k: int
    eval_sets: int = 9
    eval_size: int = 512

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.eval_sets < 1 or self.eval_size < 1:
            raise ValueError("eval_sets and eval_size must be >= 1")


@dataclass
class SplitBundle:
    train_k: list[PromptExample]
    dev_k: list[PromptExample]
    eval_pool: list[PromptExample]
    eval_sets: list[list[PromptExample]]


@dataclass(frozen=True)
class MixedTrainSet:
    tasks: tuple[Task, ...]
    examples: list[PromptExample]


def stratification_class(example: PromptExample) -> str:
    """The class an example counts toward in K-shot stratification.

    The joint entity/relation task stratifies on the relation mask (the
    entity masks are constant per position); the binary tasks stratify on
    their single mask.
    """
    index = 2 if example.task is Task.ECRC else 1
    gold = example.gold(index)
    if gold is None:
        raise SplitError(f"example {example.example_id} has no gold for mask {index}")
    return gold


def entity_ids(example: PromptExample) -> set[str]:
    """Subject and object entity ids of one entity/relation example."""
    return {example.provenance.subject, example.provenance.object}


def _sorted(examples: Sequence[PromptExample]) -> list[PromptExample]:
    return sorted(examples, key=lambda e: e.example_id)


def sample_kshot(
    dataset: Sequence[PromptExample], config: SplitConfig
) -> tuple[list[PromptExample], list[PromptExample], list[PromptExample]]:
    """Sample k train + k dev examples per class, uniformly without replacement.

    Returns (train_k, dev_k, remainder), each sorted by example id.
    """
    by_class: dict[str, list[PromptExample]] = {}
    for example in _sorted(dataset):
        by_class.setdefault(stratification_class(example), []).append(example)

    train: list[PromptExample] = []
    dev: list[PromptExample] = []
    remainder: list[PromptExample] = []
    for class_label in sorted(by_class):
        members = by_class[class_label]
        need = 2 * config.k
        if len(members) < need:
            raise InsufficientClassExamplesError(class_label, len(members), need)
        rng = random.Random(f"{config.seed}:kshot:{class_label}")
        picked = rng.sample(members, need)
        picked_ids = set(e.example_id for e in picked)
        train.extend(picked[: config.k])
        dev.extend(picked[config.k :])
        remainder.extend(e for e in members if e.example_id not in picked_ids)
    return _sorted(train), _sorted(dev), _sorted(remainder)


def decontaminate_ecrc(
    train_examples: Sequence[PromptExample], candidate_pool: Sequence[PromptExample]
) -> list[PromptExample]:
    """Drop pool examples that share any entity with a training example."""
    train_entities: set[str] = set()
    for example in train_examples:
        train_entities |= entity_ids(example)
    filtered = [e for e in candidate_pool if not (entity_ids(e) & train_entities)]
    if candidate_pool and not filtered:
        logger.warning(
            "decontamination removed the entire candidate pool (%d examples)",
            len(candidate_pool),
        )
    return _sorted(filtered)


def sample_eval_sets(
    pool: Sequence[PromptExample], config: SplitConfig
) -> list[list[PromptExample]]:
    """Sample ``config.eval_sets`` independent evaluation sets from the pool.

    Each set is drawn without replacement within itself; sets may overlap
    each other. Sets are clamped (with a warning) when the pool is smaller
    than ``config.eval_size``.
    """
    if not pool:
        raise EmptyPoolError("evaluation pool is empty")
    pool = _sorted(pool)
    size = min(config.eval_size, len(pool))
    if size < config.eval_size:
        logger.warning(
            "eval pool has %d examples; clamping eval sets to %d (requested %d)",
            len(pool),
            size,
            config.eval_size,
        )
    sets = []
    for i in range(1, config.eval_sets + 1):
        rng = random.Random(f"{config.seed}:eval:{i}")
        sets.append(rng.sample(pool, size))
    return sets


def mix_examples(groups: Sequence[Sequence[PromptExample]], seed_key: str) -> list[PromptExample]:
    """Concatenate example groups and shuffle deterministically."""
    merged = [e for group in groups for e in group]
    random.Random(seed_key).shuffle(merged)
    return merged


def mix_tasks(
    bundles: Mapping[Task, SplitBundle], subset: Sequence[Task], seed: int
) -> MixedTrainSet:
    """Merge the train sets of the chosen tasks into one shuffled train set."""
    tasks = tuple(sorted(set(subset), key=lambda t: t.value))
    if not tasks:
        raise EmptySubsetError("task subset is empty")
    for task in tasks:
        if task not in bundles:
            raise SplitError(f"no split bundle for task {task.value!r}")
    key = "+".join(t.value for t in tasks)
    examples = mix_examples([bundles[t].train_k for t in tasks], f"{seed}:mix:{key}")
    return MixedTrainSet(tasks, examples)


@dataclass(frozen=True)
class SplitReport:
    task: Task
    k: int
    seed: int
    class_counts: dict[str, int] = field(default_factory=dict)
    decontamination_removed: int = 0
    eval_set_size: int = 0
    eval_sets: int = 0

    def as_dict(self) -> dict:
        return {
            "task": self.task.value,
            "k": self.k,
            "seed": self.seed,
            "class_counts": dict(sorted(self.class_counts.items())),
            "decontamination_removed": self.decontamination_removed,
            "eval_set_size": self.eval_set_size,
            "eval_sets": self.eval_sets,
        }


def make_bundle(
    dataset: Sequence[PromptExample], task: Task, config: SplitConfig
) -> tuple[SplitBundle, SplitReport]:
    """Full split pipeline for one task: K-shot sample, decontaminate
    (entity/relation task only), then sample the evaluation sets."""
    train, dev, remainder = sample_kshot(dataset, config)
    removed = 0
    pool = remainder
    if task is Task.ECRC:
        pool = decontaminate_ecrc(train + dev, remainder)
        removed = len(remainder) - len(pool)
    eval_sets = sample_eval_sets(pool, config)
    class_counts: dict[str, int] = {}
    for example in train:
        label = stratification_class(example)
        class_counts[label] = class_counts.get(label, 0) + 1
    report = SplitReport(
        task=task,
        k=config.k,
        seed=config.seed,
        class_counts=class_counts,
        decontamination_removed=removed,
        eval_set_size=len(eval_sets[0]) if eval_sets else 0,
        eval_sets=len(eval_sets),
    )
    return SplitBundle(train, dev, pool, eval_sets), report
