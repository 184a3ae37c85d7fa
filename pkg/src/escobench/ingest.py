"""Parse taxonomy source files into a validated, frozen Taxonomy.

Two input paths:

* canonical JSONL interchange files (one entity or relation object per line),
* an adapter for ESCO-style CSV releases (occupations, skills, and
  occupation-skill relation files with configurable column names).

Both run the same validation. In strict mode (default) any error fails the
load; permissive mode drops bad records with warnings instead. Every issue
carries a ``file:line`` locator.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .jsonio import write_jsonl
from .taxonomy import (
    Entity,
    EntityKind,
    RelationKind,
    Taxonomy,
    TaxonomyError,
    TaxonomyStats,
    Triple,
)

_KIND_NAMES = {"skill": EntityKind.SKILL, "occupation": EntityKind.OCCUPATION}
_RELATION_NAMES = {r.value: r for r in RelationKind}
_ESCO_RELATION_TYPES = {
    "essential": RelationKind.IS_ESSENTIAL_FOR,
    "optional": RelationKind.IS_OPTIONAL_FOR,
}


class IngestError(Exception):
    pass


class MissingFileError(IngestError):
    pass


class MissingColumnError(IngestError):
    pass


class ValidationFailedError(IngestError):
    def __init__(self, report: "ValidationReport"):
        lines = "; ".join(str(i) for i in report.errors[:5])
        more = f" (+{len(report.errors) - 5} more)" if len(report.errors) > 5 else ""
        super().__init__(f"{len(report.errors)} validation error(s): {lines}{more}")
        self.report = report


@dataclass(frozen=True)
class Issue:
    locator: str  # "file:line"
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.locator} [{self.kind}] {self.message}"

    def as_dict(self) -> dict[str, str]:
        return {"locator": self.locator, "kind": self.kind, "message": self.message}


@dataclass
class ValidationReport:
    errors: list[Issue] = field(default_factory=list)
    warnings: list[Issue] = field(default_factory=list)
    counts: TaxonomyStats | None = None

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, locator: str, kind: str, message: str) -> None:
        self.errors.append(Issue(locator, kind, message))

    def warn(self, locator: str, kind: str, message: str) -> None:
        self.warnings.append(Issue(locator, kind, message))

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "errors": [i.as_dict() for i in self.errors],
            "warnings": [i.as_dict() for i in self.warnings],
            "counts": self.counts.as_dict() if self.counts else None,
        }


@dataclass(frozen=True)
class ColumnMap:
    """Source layout of an ESCO-style CSV release.

    Column names are configuration, not constants: releases change layouts.
    Defaults target the ESCO download format. ``alt_label_delimiter``
    separates multiple alternative labels inside one cell.
    """

    id: str = "conceptUri"
    preferred_label: str = "preferredLabel"
    alt_labels: str = "altLabels"
    description: str = "description"
    subject: str = "skillUri"
    object: str = "occupationUri"
    relation_type: str = "relationType"
    alt_label_delimiter: str = "\n"
    occupations_file: str = "occupations.csv"
    skills_file: str = "skills.csv"
    relations_file: str = "occupationSkillRelations.csv"

    def __post_init__(self) -> None:
        if not self.alt_label_delimiter:
            raise ValueError("alt_label_delimiter must be non-empty")


def _require(path: Path) -> Path:
    if not path.is_file():
        raise MissingFileError(f"missing file: {path}")
    return path


def _finish(
    taxonomy: Taxonomy, report: ValidationReport, strict: bool
) -> tuple[Taxonomy, ValidationReport]:
    taxonomy.freeze()
    report.counts = taxonomy.stats()
    if strict and not report.ok:
        raise ValidationFailedError(report)
    return taxonomy, report


def _add_entity_record(
    taxonomy: Taxonomy,
    report: ValidationReport,
    locator: str,
    id: str,
    kind: EntityKind,
    preferred_label: str,
    alt_labels: list[str],
    description: str | None,
) -> None:
    try:
        entity, warnings = Entity.make(id, kind, preferred_label, alt_labels, description)
        for message in warnings:
            report.warn(locator, "AltLabelDropped", message)
        taxonomy.add_entity(entity)
    except TaxonomyError as exc:
        report.error(locator, type(exc).__name__.removesuffix("Error"), str(exc))


def _add_relation_record(
    taxonomy: Taxonomy,
    report: ValidationReport,
    locator: str,
    subject: str,
    predicate: RelationKind,
    object: str,
) -> None:
    try:
        taxonomy.add_relation(Triple(subject, predicate, object))
    except TaxonomyError as exc:
        report.error(locator, type(exc).__name__.removesuffix("Error"), str(exc))


# -- canonical JSONL -----------------------------------------------------------


def load_canonical(
    entities_path: str | Path, relations_path: str | Path, strict: bool = True
) -> tuple[Taxonomy, ValidationReport]:
    """Load the canonical JSONL interchange format.

    Entity records: ``{"id", "kind": "skill"|"occupation", "preferred_label",
    "alt_labels": [...], "description": optional}``. Relation records:
    ``{"subject", "predicate": "isEssentialFor"|"isOptionalFor", "object"}``.
    """
    entities_path = _require(Path(entities_path))
    relations_path = _require(Path(relations_path))
    taxonomy = Taxonomy()
    report = ValidationReport()

    for line_no, record in _iter_jsonl(entities_path, report):
        locator = f"{entities_path.name}:{line_no}"
        kind = _KIND_NAMES.get(record.get("kind", ""))
        if kind is None:
            report.error(locator, "UnknownKind", f"unknown entity kind {record.get('kind')!r}")
            continue
        if "id" not in record or "preferred_label" not in record:
            report.error(locator, "MissingField", "entity record needs id and preferred_label")
            continue
        alt_labels = record.get("alt_labels", [])
        if not isinstance(alt_labels, list):
            report.error(locator, "MalformedField", "alt_labels must be a list")
            continue
        description = record.get("description")
        if description is not None and not isinstance(description, str):
            report.error(locator, "MalformedField", "description must be a string")
            continue
        _add_entity_record(
            taxonomy,
            report,
            locator,
            str(record["id"]),
            kind,
            str(record["preferred_label"]),
            [str(a) for a in alt_labels],
            description,
        )

    for line_no, record in _iter_jsonl(relations_path, report):
        locator = f"{relations_path.name}:{line_no}"
        predicate = _RELATION_NAMES.get(record.get("predicate", ""))
        if predicate is None:
            report.error(
                locator, "UnknownRelationType", f"unknown predicate {record.get('predicate')!r}"
            )
            continue
        if "subject" not in record or "object" not in record:
            report.error(locator, "MissingField", "relation record needs subject and object")
            continue
        _add_relation_record(
            taxonomy, report, locator, str(record["subject"]), predicate, str(record["object"])
        )

    return _finish(taxonomy, report, strict)


def _iter_jsonl(path: Path, report: ValidationReport):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                report.error(f"{path.name}:{line_no}", "ParseError", exc.msg)
                continue
            if not isinstance(record, dict):
                report.error(f"{path.name}:{line_no}", "ParseError", "record is not an object")
                continue
            yield line_no, record


def write_canonical(
    taxonomy: Taxonomy, entities_path: str | Path, relations_path: str | Path
) -> None:
    """Export the store as canonical JSONL, sorted by id for reproducibility."""
    entity_records = []
    for entity in taxonomy.entities():
        record = {
            "id": entity.id,
            "kind": entity.kind.value,
            "preferred_label": entity.preferred_label,
            "alt_labels": list(entity.alt_labels),
        }
        if entity.description is not None:
            record["description"] = entity.description
        entity_records.append(record)
    write_jsonl(entities_path, entity_records)
    write_jsonl(
        relations_path,
        [
            {"subject": t.subject, "predicate": t.predicate.value, "object": t.object}
            for t in taxonomy.query_triples()
        ],
    )


# -- ESCO CSV adapter ------------------------------------------------------------


def load_esco_csv(
    directory: str | Path, column_map: ColumnMap | None = None, strict: bool = True
) -> tuple[Taxonomy, ValidationReport]:
    """Load an ESCO-style CSV release directory.

    Relation type cells mapping to "essential"/"optional" become the two
    relation kinds; anything else is an UnknownRelationType error.
    Alternative-label cells are split on the configured delimiter.
    """
    columns = column_map or ColumnMap()
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingFileError(f"missing directory: {directory}")
    taxonomy = Taxonomy()
    report = ValidationReport()

    for filename, kind in (
        (columns.skills_file, EntityKind.SKILL),
        (columns.occupations_file, EntityKind.OCCUPATION),
    ):
        path = _require(directory / filename)
        for line_no, row in _iter_csv(
            path, [columns.id, columns.preferred_label, columns.alt_labels, columns.description]
        ):
            locator = f"{path.name}:{line_no}"
            alt_cell = row[columns.alt_labels]
            alt_labels = alt_cell.split(columns.alt_label_delimiter) if alt_cell else []
            _add_entity_record(
                taxonomy,
                report,
                locator,
                row[columns.id],
                kind,
                row[columns.preferred_label],
                alt_labels,
                row[columns.description] or None,
            )

    path = _require(directory / columns.relations_file)
    for line_no, row in _iter_csv(
        path, [columns.subject, columns.object, columns.relation_type]
    ):
        locator = f"{path.name}:{line_no}"
        predicate = _ESCO_RELATION_TYPES.get(row[columns.relation_type].strip().lower())
        if predicate is None:
            report.error(
                locator,
                "UnknownRelationType",
                f"unknown relation type {row[columns.relation_type]!r}",
            )
            continue
        _add_relation_record(
            taxonomy, report, locator, row[columns.subject], predicate, row[columns.object]
        )

    return _finish(taxonomy, report, strict)


def _iter_csv(path: Path, required_columns: list[str]):
    # utf-8-sig: ESCO releases ship with a BOM.
    with open(path, encoding="utf-8-sig", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required_columns if c not in header]
        if missing:
            raise MissingColumnError(f"{path.name}: missing column(s) {missing}")
        for row in reader:
            # line_num accounts for embedded newlines in quoted cells
            yield reader.line_num, {c: (row.get(c) or "") for c in required_columns}
