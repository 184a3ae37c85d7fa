"""In-memory validated store for skill/occupation entities and their relations.

The store keeps exactly two things: entities (skills and occupations, each
with a preferred label, optional alternative labels, and an optional
description) and skill->occupation relation triples. Alternative-label and
description pairings are *not* stored as triples; generators derive them
from entity fields.

The store is built single-writer, then sealed with :meth:`Taxonomy.freeze`.
All enumeration orders are lexicographic by entity id so downstream output
is byte-reproducible.
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field
from enum import Enum


class EntityKind(Enum):
    SKILL = "skill"
    OCCUPATION = "occupation"


class RelationKind(Enum):
    IS_ESSENTIAL_FOR = "isEssentialFor"
    IS_OPTIONAL_FOR = "isOptionalFor"


class TaxonomyError(Exception):
    """Base class for taxonomy store violations."""


class DuplicateIdError(TaxonomyError):
    pass


class EmptyLabelError(TaxonomyError):
    pass


class UnknownEntityError(TaxonomyError):
    pass


class KindMismatchError(TaxonomyError):
    pass


class DuplicateTripleError(TaxonomyError):
    pass


class FrozenTaxonomyError(TaxonomyError):
    """Mutation attempted after freeze()."""


class UnfrozenTaxonomyError(TaxonomyError):
    """Operation requires a frozen (sealed) taxonomy."""


def _clean_label(text: str) -> str:
    # Trim surrounding whitespace only; no case folding (distinct labels may
    # differ only by case).
    return text.strip()


@dataclass(frozen=True)
class Entity:
    """One skill or occupation.

    ``alt_labels`` holds surface-form synonyms of ``preferred_label``; it is
    deduplicated and never contains the preferred label itself.
    """

    id: str
    kind: EntityKind
    preferred_label: str
    alt_labels: tuple[str, ...] = ()
    description: str | None = None

    @staticmethod
    def make(
        id: str,
        kind: EntityKind,
        preferred_label: str,
        alt_labels: list[str] | tuple[str, ...] = (),
        description: str | None = None,
    ) -> tuple["Entity", list[str]]:
        """Normalize fields and build an entity.

        Returns the entity plus warnings for silently dropped alt labels
        (duplicates or copies of the preferred label).
        """
        label = _clean_label(preferred_label)
        if not label:
            raise EmptyLabelError(f"entity {id!r} has an empty preferred label")
        warnings: list[str] = []
        cleaned: list[str] = []
        seen: set[str] = set()
        for alt in alt_labels:
            alt = _clean_label(alt)
            if not alt:
                warnings.append(f"entity {id!r}: dropped empty alt label")
                continue
            if alt == label:
                warnings.append(f"entity {id!r}: alt label equals preferred label {label!r}")
                continue
            if alt in seen:
                warnings.append(f"entity {id!r}: duplicate alt label {alt!r}")
                continue
            seen.add(alt)
            cleaned.append(alt)
        desc = None
        if description is not None:
            desc = description.strip()
            if not desc:
                desc = None
        return Entity(id, kind, label, tuple(cleaned), desc), warnings

    @property
    def labels(self) -> tuple[str, ...]:
        """Preferred label followed by alternative labels."""
        return (self.preferred_label,) + self.alt_labels


@dataclass(frozen=True)
class Triple:
    """A skill -> occupation relation; subject must be a skill, object an occupation."""

    subject: str
    predicate: RelationKind
    object: str

    def sort_key(self) -> tuple[str, str, str]:
        return (self.subject, self.object, self.predicate.value)


@dataclass(frozen=True)
class TaxonomyStats:
    n_skills: int
    n_occupations: int
    n_essential: int
    n_optional: int
    n_alt_labels: int
    n_descriptions: int

    def as_dict(self) -> dict[str, int]:
        return {
            "n_skills": self.n_skills,
            "n_occupations": self.n_occupations,
            "n_essential": self.n_essential,
            "n_optional": self.n_optional,
            "n_alt_labels": self.n_alt_labels,
            "n_descriptions": self.n_descriptions,
        }


@dataclass
class Taxonomy:
    """Validated entity/relation store; freeze before handing to generators."""

    _entities: dict[str, Entity] = field(default_factory=dict)
    _triples: dict[tuple[str, str, str], Triple] = field(default_factory=dict)
    _frozen: bool = False

    # -- construction -------------------------------------------------

    def add_entity(self, entity: Entity) -> None:
        if self._frozen:
            raise FrozenTaxonomyError("taxonomy is frozen")
        if not _clean_label(entity.preferred_label):
            raise EmptyLabelError(f"entity {entity.id!r} has an empty preferred label")
        if entity.id in self._entities:
            raise DuplicateIdError(f"duplicate entity id {entity.id!r}")
        self._entities[entity.id] = entity

    def add_relation(self, triple: Triple) -> None:
        if self._frozen:
            raise FrozenTaxonomyError("taxonomy is frozen")
        subject = self._entities.get(triple.subject)
        obj = self._entities.get(triple.object)
        if subject is None:
            raise UnknownEntityError(f"unknown subject {triple.subject!r}")
        if obj is None:
            raise UnknownEntityError(f"unknown object {triple.object!r}")
        if subject.kind is not EntityKind.SKILL:
            raise KindMismatchError(f"subject {triple.subject!r} is not a skill")
        if obj.kind is not EntityKind.OCCUPATION:
            raise KindMismatchError(f"object {triple.object!r} is not an occupation")
        key = (triple.subject, triple.predicate.value, triple.object)
        if key in self._triples:
            raise DuplicateTripleError(f"duplicate triple {key}")
        self._triples[key] = triple

    def freeze(self) -> "Taxonomy":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    def require_frozen(self) -> None:
        if not self._frozen:
            raise UnfrozenTaxonomyError("taxonomy must be frozen first")

    # -- queries ------------------------------------------------------

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self._entities

    def __len__(self) -> int:
        return len(self._entities)

    def get(self, entity_id: str) -> Entity:
        entity = self._entities.get(entity_id)
        if entity is None:
            raise UnknownEntityError(f"unknown entity {entity_id!r}")
        return entity

    def entities(self, kind: EntityKind | None = None) -> Iterator[Entity]:
        """Entities in lexicographic id order, optionally one kind only."""
        for entity_id in sorted(self._entities):
            entity = self._entities[entity_id]
            if kind is None or entity.kind is kind:
                yield entity

    def query_triples(self, predicate: RelationKind | None = None) -> list[Triple]:
        """Triples sorted by (subject, object, predicate), optionally filtered."""
        triples = [
            t for t in self._triples.values() if predicate is None or t.predicate is predicate
        ]
        triples.sort(key=Triple.sort_key)
        return triples

    def stats(self) -> TaxonomyStats:
        n_skills = sum(1 for e in self._entities.values() if e.kind is EntityKind.SKILL)
        n_essential = sum(
            1 for t in self._triples.values() if t.predicate is RelationKind.IS_ESSENTIAL_FOR
        )
        return TaxonomyStats(
            n_skills=n_skills,
            n_occupations=len(self._entities) - n_skills,
            n_essential=n_essential,
            n_optional=len(self._triples) - n_essential,
            n_alt_labels=sum(len(e.alt_labels) for e in self._entities.values()),
            n_descriptions=sum(1 for e in self._entities.values() if e.description is not None),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Taxonomy):
            return NotImplemented
        return (
            list(self.entities()) == list(other.entities())
            and self.query_triples() == other.query_triples()
        )
