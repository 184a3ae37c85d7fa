"""Independent brute-force oracles.

These deliberately avoid the library's code paths: macro-F1 is recomputed
from raw (gold, predicted) pairs instead of confusion matrices, and the
set-level checks use plain nested loops.
"""

from __future__ import annotations

from escobench.datagen import PromptExample
from escobench.taxonomy import Taxonomy


def brute_force_macro_f1(pairs: list[tuple[str, str]]) -> float:
    """Mean per-class F1 over classes observed in golds or predictions."""
    classes = sorted({g for g, _ in pairs} | {p for _, p in pairs})
    if not classes:
        return 0.0
    f1s = []
    for c in classes:
        tp = sum(1 for g, p in pairs if g == c and p == c)
        fp = sum(1 for g, p in pairs if g != c and p == c)
        fn = sum(1 for g, p in pairs if g == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1s.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)
    return sum(f1s) / len(f1s)


def brute_force_decontaminate(
    train: list[PromptExample], pool: list[PromptExample]
) -> list[PromptExample]:
    """Keep pool examples sharing no subject/object entity with any train example."""
    kept = []
    for candidate in pool:
        candidate_ids = {candidate.provenance.subject, candidate.provenance.object}
        leaked = False
        for reference in train:
            if candidate_ids & {reference.provenance.subject, reference.provenance.object}:
                leaked = True
                break
        if not leaked:
            kept.append(candidate)
    return kept


def true_synonym_pairs(taxonomy: Taxonomy) -> set[tuple[str, str]]:
    """All (entity id, surface form) pairs that are actually true."""
    pairs = set()
    for entity in taxonomy.entities():
        for label in entity.labels:
            pairs.add((entity.id, label))
    return pairs


def own_description(taxonomy: Taxonomy, entity_id: str) -> str | None:
    return taxonomy.get(entity_id).description
