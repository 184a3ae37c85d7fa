#!/usr/bin/env python3
"""Emit a deterministic synthetic taxonomy in canonical JSONL.

Handy for exercising the pipeline without a real taxonomy release:

    python scripts/make_toy_taxonomy.py --out toy_tax --skills 80 --occupations 30
"""

import argparse
import json
import random
from pathlib import Path


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--skills", type=int, default=80)
    parser.add_argument("--occupations", type=int, default=30)
    parser.add_argument("--seed", type=int, default=11)
    parser.add_argument("--max-relations-per-skill", type=int, default=5)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "entities.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for i in range(args.skills):
            fh.write(json.dumps({
                "id": f"toy:s{i:04d}",
                "kind": "skill",
                "preferred_label": f"skill number {i}",
                "alt_labels": [f"skill number {i} form {j}" for j in range(rng.randint(1, 3))],
                "description": f"doing task {i} with method {i % 17}",
            }, sort_keys=True) + "\n")
        for i in range(args.occupations):
            fh.write(json.dumps({
                "id": f"toy:o{i:04d}",
                "kind": "occupation",
                "preferred_label": f"occupation number {i}",
                "alt_labels": [f"occupation number {i} form {j}" for j in range(rng.randint(1, 2))],
                "description": f"role {i} working in area {i % 5}",
            }, sort_keys=True) + "\n")

    with open(out / "relations.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for i in range(args.skills):
            count = rng.randint(1, args.max_relations_per_skill)
            for j in rng.sample(range(args.occupations), min(count, args.occupations)):
                fh.write(json.dumps({
                    "subject": f"toy:s{i:04d}",
                    "predicate": rng.choice(["isEssentialFor", "isOptionalFor"]),
                    "object": f"toy:o{j:04d}",
                }, sort_keys=True) + "\n")

    print(f"wrote {out}/entities.jsonl and {out}/relations.jsonl")


if __name__ == "__main__":
    main()
