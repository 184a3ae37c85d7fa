"""Cloze-prompt template engine with composable sub-prompts and verbalizers.

Templates are written in a small mini-language: ``{slot}`` marks a text slot,
``[MASK:k]`` a mask with 1-based index ``k``, and everything else is literal.
Sub-prompt templates compose into larger prompts with masks renumbered
left-to-right, so a classifier head can be attached to each mask position.

A verbalizer is a one-to-one map from class labels to natural-language label
words; predicting a label word at a mask position classifies the example.

Rendered text carries masks as explicit ``<mask_k>`` markers. Model-side code
maps those onto whatever sentinel mechanism its model family uses; the file
format stays model-agnostic.
"""

from __future__ import annotations

import json
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from importlib import resources


class TemplateError(Exception):
    """Base class for template construction and rendering failures."""


class TemplateParseError(TemplateError):
    pass


class UnterminatedBraceError(TemplateParseError):
    pass


class DuplicateSlotError(TemplateParseError):
    pass


class NonContiguousMaskIndicesError(TemplateParseError):
    pass


class SlotCollisionError(TemplateError):
    pass


class MissingBindingError(TemplateError):
    pass


class UnknownGoldClassError(TemplateError):
    pass


class VerbalizerError(Exception):
    pass


class UnknownClassError(VerbalizerError):
    pass


class UnknownWordError(VerbalizerError):
    pass


# -- segments and templates -------------------------------------------------


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class Slot:
    name: str


@dataclass(frozen=True)
class Mask:
    index: int


Segment = Literal | Slot | Mask

MASK_MARKER_RE = re.compile(r"<mask_(\d+)>")
_MASK_TOKEN_RE = re.compile(r"\[MASK:(\d+)\]")


def mask_marker(index: int) -> str:
    return f"<mask_{index}>"


@dataclass(frozen=True)
class PromptTemplate:
    """An ordered sequence of literal/slot/mask segments.

    Slot names are unique; mask indices are distinct and contiguous from 1.
    """

    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        names = [s.name for s in self.segments if isinstance(s, Slot)]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise DuplicateSlotError(f"duplicate slot name(s): {sorted(dupes)}")
        indices = sorted(s.index for s in self.segments if isinstance(s, Mask))
        if indices != list(range(1, len(indices) + 1)):
            raise NonContiguousMaskIndicesError(
                f"mask indices must be distinct and contiguous from 1, got {indices}"
            )

    @property
    def slot_names(self) -> frozenset[str]:
        return frozenset(s.name for s in self.segments if isinstance(s, Slot))

    @property
    def mask_count(self) -> int:
        return sum(1 for s in self.segments if isinstance(s, Mask))


def parse_template(spec: str) -> PromptTemplate:
    """Parse the mini-language into a template.

    ``{name}`` becomes a slot, ``[MASK:k]`` a mask, all other text a literal.
    """
    if not spec:
        raise TemplateParseError("template spec is empty")
    segments: list[Segment] = []
    buf: list[str] = []

    def flush() -> None:
        if buf:
            segments.append(Literal("".join(buf)))
            buf.clear()

    pos = 0
    while pos < len(spec):
        ch = spec[pos]
        if ch == "{":
            end = spec.find("}", pos + 1)
            if end == -1:
                raise UnterminatedBraceError(f"unterminated '{{' at position {pos}")
            name = spec[pos + 1 : end]
            if not name or "{" in name:
                raise TemplateParseError(f"invalid slot name {name!r} at position {pos}")
            flush()
            segments.append(Slot(name))
            pos = end + 1
            continue
        if ch == "[":
            match = _MASK_TOKEN_RE.match(spec, pos)
            if match:
                flush()
                segments.append(Mask(int(match.group(1))))
                pos = match.end()
                continue
        buf.append(ch)
        pos += 1
    flush()
    return PromptTemplate(tuple(segments))


def serialize_template(template: PromptTemplate) -> str:
    """Inverse of :func:`parse_template` for mini-language templates."""
    parts = []
    for segment in template.segments:
        if isinstance(segment, Literal):
            parts.append(segment.text)
        elif isinstance(segment, Slot):
            parts.append("{" + segment.name + "}")
        else:
            parts.append(f"[MASK:{segment.index}]")
    return "".join(parts)


def compose(parts: Sequence[PromptTemplate], joiner: PromptTemplate | None = None) -> PromptTemplate:
    """Join sub-prompt templates, renumbering masks left-to-right from 1.

    ``joiner`` is inserted between consecutive parts; ``None`` joins directly.
    Raises :class:`SlotCollisionError` when two inserted templates declare the
    same slot name (the joiner counts once per insertion).
    """
    if not parts:
        raise TemplateError("compose() needs at least one part")
    raw: list[Segment] = []
    for i, part in enumerate(parts):
        if i > 0 and joiner is not None:
            raw.extend(joiner.segments)
        raw.extend(part.segments)

    names = [s.name for s in raw if isinstance(s, Slot)]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise SlotCollisionError(f"colliding slot name(s): {sorted(dupes)}")

    renumbered: list[Segment] = []
    next_index = 1
    for segment in raw:
        if isinstance(segment, Mask):
            renumbered.append(Mask(next_index))
            next_index += 1
        else:
            renumbered.append(segment)
    return PromptTemplate(tuple(renumbered))


# -- verbalizers --------------------------------------------------------------


@dataclass(frozen=True)
class Verbalizer:
    """Bijective class-label -> label-word map, referenced by name."""

    name: str
    class_to_word: Mapping[str, str]

    def __post_init__(self) -> None:
        if not self.class_to_word:
            raise VerbalizerError(f"verbalizer {self.name!r} is empty")
        words = list(self.class_to_word.values())
        if any(not c for c in self.class_to_word) or any(not w for w in words):
            raise VerbalizerError(f"verbalizer {self.name!r} has empty classes or words")
        if len(set(words)) != len(words):
            raise VerbalizerError(f"verbalizer {self.name!r} is not one-to-one")
        object.__setattr__(self, "class_to_word", dict(self.class_to_word))

    @property
    def word_to_class(self) -> dict[str, str]:
        return {w: c for c, w in self.class_to_word.items()}

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(sorted(self.class_to_word))

    def verbalize(self, class_label: str) -> str:
        try:
            return self.class_to_word[class_label]
        except KeyError:
            raise UnknownClassError(
                f"class {class_label!r} not in verbalizer {self.name!r}"
            ) from None

    def unverbalize(self, word: str) -> str:
        try:
            return self.word_to_class[word]
        except KeyError:
            raise UnknownWordError(f"word {word!r} not in verbalizer {self.name!r}") from None


# -- rendering ----------------------------------------------------------------


@dataclass(frozen=True)
class MaskSlot:
    index: int
    class_space: str | None
    gold: str | None


@dataclass(frozen=True)
class RenderedPrompt:
    """Template instantiated with slot text; masks emitted as ``<mask_k>``."""

    text: str
    mask_slots: tuple[MaskSlot, ...]


def render(
    template: PromptTemplate,
    bindings: Mapping[str, str],
    mask_spaces: Mapping[int, Verbalizer] | None = None,
    golds: Mapping[int, str] | None = None,
) -> RenderedPrompt:
    """Substitute slots, emit mask markers, and attach class spaces and golds.

    ``bindings`` must cover every slot. ``golds`` may be empty for
    inference-only rendering; a gold class given for mask ``k`` must belong to
    ``mask_spaces[k]``.
    """
    golds = golds or {}
    mask_spaces = mask_spaces or {}
    missing = template.slot_names - set(bindings)
    if missing:
        raise MissingBindingError(f"missing binding(s) for slot(s): {sorted(missing)}")

    parts: list[str] = []
    slots: list[MaskSlot] = []
    for segment in template.segments:
        if isinstance(segment, Literal):
            parts.append(segment.text)
        elif isinstance(segment, Slot):
            parts.append(bindings[segment.name])
        else:
            parts.append(mask_marker(segment.index))
            space = mask_spaces.get(segment.index)
            gold = golds.get(segment.index)
            if gold is not None:
                if space is None:
                    raise UnknownGoldClassError(
                        f"gold class given for mask {segment.index} but no class space attached"
                    )
                if gold not in space.class_to_word:
                    raise UnknownGoldClassError(
                        f"gold class {gold!r} not in verbalizer {space.name!r}"
                    )
            slots.append(MaskSlot(segment.index, space.name if space else None, gold))
    slots.sort(key=lambda s: s.index)
    return RenderedPrompt("".join(parts), tuple(slots))


# -- built-in presets ---------------------------------------------------------


def _preset_root():
    return resources.files("escobench").joinpath("presets")


def load_template(name: str) -> PromptTemplate:
    """Load a built-in template preset (a mini-language text file)."""
    text = _preset_root().joinpath(f"templates/{name}.txt").read_text(encoding="utf-8")
    return parse_template(text.rstrip("\n"))


def load_verbalizer(name: str) -> Verbalizer:
    """Load a built-in verbalizer preset (a JSON class->word map)."""
    raw = _preset_root().joinpath(f"verbalizers/{name}.json").read_text(encoding="utf-8")
    return Verbalizer(name, json.loads(raw))
