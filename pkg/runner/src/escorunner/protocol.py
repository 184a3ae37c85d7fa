"""The file protocol shared with the evaluation harness.

Dataset files are JSONL: a header record (schema version, task label,
verbalizer tables keyed by class-space name) followed by one example record
per line. Prediction files are plain JSONL records
``{"example_id": ..., "predictions": {"1": class, ...}}``; run metadata goes
into a ``<name>.meta.json`` sidecar so the prediction records stay minimal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA_VERSION = "1"


class ProtocolError(Exception):
    pass


class SchemaMismatchError(ProtocolError):
    pass


@dataclass(frozen=True)
class MaskSpec:
    index: int
    class_space: str
    gold: str | None = None


@dataclass(frozen=True)
class Example:
    example_id: str
    task: str
    text: str
    masks: tuple[MaskSpec, ...]


@dataclass
class Dataset:
    examples: list[Example]
    verbalizers: dict[str, dict[str, str]] = field(default_factory=dict)
    task: str = ""

    def space(self, name: str) -> dict[str, str]:
        try:
            return self.verbalizers[name]
        except KeyError:
            raise SchemaMismatchError(f"no verbalizer for class space {name!r}") from None


def read_dataset(path: str | Path) -> Dataset:
    """Parse a dataset file; an empty file is an empty dataset."""
    path = Path(path)
    lines = [l for l in path.read_text(encoding="utf-8").splitlines() if l.strip()]
    if not lines:
        return Dataset(examples=[])
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise SchemaMismatchError(f"{path}:1: invalid JSON header ({exc.msg})") from exc
    if header.get("record") != "header":
        raise SchemaMismatchError(f"{path}: first record must be the dataset header")
    if header.get("schema_version") != SCHEMA_VERSION:
        raise SchemaMismatchError(
            f"{path}: unsupported schema_version {header.get('schema_version')!r}"
        )
    verbalizers = header.get("verbalizers", {})
    examples = []
    for line_no, line in enumerate(lines[1:], start=2):
        try:
            record = json.loads(line)
            masks = tuple(
                MaskSpec(int(m["index"]), m["class_space"], m.get("gold"))
                for m in sorted(record["masks"], key=lambda m: int(m["index"]))
            )
            example = Example(record["example_id"], record["task"], record["text"], masks)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise SchemaMismatchError(f"{path}:{line_no}: malformed example ({exc})") from exc
        for mask in masks:
            if mask.class_space not in verbalizers:
                raise SchemaMismatchError(
                    f"{path}:{line_no}: mask {mask.index} references unknown "
                    f"class space {mask.class_space!r}"
                )
        examples.append(example)
    return Dataset(examples=examples, verbalizers=verbalizers, task=header.get("task", ""))


def write_predictions(
    path: str | Path,
    predictions: list[tuple[str, dict[int, str]]],
    meta: dict | None = None,
) -> None:
    """Write prediction records, plus an optional metadata sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for example_id, picks in predictions:
            record = {
                "example_id": example_id,
                "predictions": {str(i): c for i, c in sorted(picks.items())},
            }
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
    if meta is not None:
        sidecar = path.with_name(path.name + ".meta.json")
        sidecar.write_text(
            json.dumps(meta, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
