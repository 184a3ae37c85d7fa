import json
import os
import random
import subprocess
import sys
from pathlib import Path

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")

from escorunner.tinymodel import make_tiny_model  # noqa: E402


def run_escobench(*args) -> subprocess.CompletedProcess:
    """Invoke the evaluation harness CLI; the runner talks to it only via files."""
    return subprocess.run(
        [sys.executable, "-m", "escobench.cli", *[str(a) for a in args]],
        capture_output=True,
        text=True,
    )


def write_toy_taxonomy(out: Path, n_skills: int, n_occupations: int, seed: int = 3) -> Path:
    """Canonical taxonomy JSONL with described, alt-labeled entities."""
    rng = random.Random(seed)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "entities.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for i in range(n_skills):
            fh.write(json.dumps({
                "id": f"t:s{i:04d}", "kind": "skill",
                "preferred_label": f"skill {i}",
                "alt_labels": [f"skill {i} form a"],
                "description": f"doing task {i} with tool {i % 13}",
            }) + "\n")
        for i in range(n_occupations):
            fh.write(json.dumps({
                "id": f"t:o{i:04d}", "kind": "occupation",
                "preferred_label": f"occupation {i}",
                "alt_labels": [f"occupation {i} form a"],
                "description": f"role {i} in area {i % 7}",
            }) + "\n")
    with open(out / "relations.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for i in range(n_skills):
            for j in rng.sample(range(n_occupations), min(2, n_occupations)):
                fh.write(json.dumps({
                    "subject": f"t:s{i:04d}",
                    "predicate": rng.choice(["isEssentialFor", "isOptionalFor"]),
                    "object": f"t:o{j:04d}",
                }) + "\n")
    return out


@pytest.fixture(scope="session")
def tiny_model(tmp_path_factory) -> Path:
    return make_tiny_model(tmp_path_factory.mktemp("model") / "tiny", seed=1)


@pytest.fixture(scope="session")
def learner_model(tmp_path_factory) -> Path:
    """Slightly larger toy checkpoint with enough capacity to memorize K=4."""
    return make_tiny_model(
        tmp_path_factory.mktemp("model") / "learner",
        seed=1, d_model=128, num_layers=3, num_heads=4, d_ff=256,
    )


@pytest.fixture(scope="session")
def qa_k4_splits(tmp_path_factory) -> Path:
    """K=4 QA split from a small taxonomy, built through the harness CLI."""
    root = tmp_path_factory.mktemp("qa_k4")
    write_toy_taxonomy(root / "tax", n_skills=30, n_occupations=10)
    assert run_escobench("generate", "--taxonomy", root / "tax", "--task", "qa",
                         "--seed", 5, "--out", root / "data").returncode == 0
    assert run_escobench("split", "--dataset", root / "data" / "qa.jsonl", "--k", 4,
                         "--seed", 2, "--eval-sets", 2, "--eval-size", 16,
                         "--out", root / "splits").returncode == 0
    return root / "splits"


def harness_score(eval_dir: Path, predictions_dir: Path, out: Path) -> dict:
    result = run_escobench("score", "--eval-dir", eval_dir,
                           "--predictions-dir", predictions_dir, "--out", out)
    assert result.returncode == 0, result.stderr
    return json.loads(out.read_text())
