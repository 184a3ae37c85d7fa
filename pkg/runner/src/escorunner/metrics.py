"""Checkpoint-selection metric, mirroring the harness definition.

Macro-F1 per mask role (role = class space, so the two entity masks of the
joint task pool together), combined as the unweighted mean over roles.
Zero-division precision/recall counts as 0 for that class.
"""

from __future__ import annotations


def macro_f1(pairs: list[tuple[str, str]]) -> float:
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


def combined_score(pairs_by_role: dict[str, list[tuple[str, str]]]) -> float:
    if not pairs_by_role:
        return 0.0
    return sum(macro_f1(pairs) for pairs in pairs_by_role.values()) / len(pairs_by_role)
