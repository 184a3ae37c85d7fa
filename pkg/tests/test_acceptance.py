"""Acceptance suite: one test per release criterion, printing PASS/FAIL lines.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they go.
"""

import hashlib
import os
import random
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from escobench.cli import main
from escobench.datagen import GenConfig, Task, dataset_stats, gen_ecrc, gen_el, gen_qa
from escobench.ingest import load_esco_csv, write_canonical
from escobench.score import score_run
from escobench.splitkit import SplitConfig, decontaminate_ecrc, entity_ids, sample_kshot
from oracles import brute_force_decontaminate, brute_force_macro_f1, true_synonym_pairs
from synth import medium_taxonomy, random_taxonomy, welding_fixture
from test_score import make_run


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"FAIL: {name}")
        raise
    print(f"PASS: {name}")


def run_cli(*args) -> int:
    return main([str(a) for a in args])


def test_dataset_count_identities():
    """Consistency identities hold exactly on any input, in under a second."""
    with criterion("dataset count identities (relation sum, EL pos=neg, QA pos=neg)"):
        started = time.perf_counter()
        fixtures = [welding_fixture(), medium_taxonomy(), random_taxonomy(3)]
        for taxonomy in fixtures:
            config = GenConfig(seed=5)
            stats = taxonomy.stats()

            ecrc = dataset_stats(gen_ecrc(taxonomy, config))
            relation_counts = ecrc.by_mask_gold.get(2, {})
            assert (
                relation_counts.get("isEssentialFor", 0)
                + relation_counts.get("isOptionalFor", 0)
                == ecrc.total
            )
            assert relation_counts.get("isEssentialFor", 0) == stats.n_essential
            assert relation_counts.get("isOptionalFor", 0) == stats.n_optional

            el = dataset_stats(gen_el(taxonomy, config))
            assert el.by_polarity.get("positive", 0) == el.by_polarity.get("negative", 0)

            qa = dataset_stats(gen_qa(taxonomy, config))
            assert qa.by_polarity.get("positive", 0) == qa.by_polarity.get("negative", 0)
        elapsed = time.perf_counter() - started
        assert elapsed < 1.0, f"identity checks took {elapsed:.2f}s"


def test_esco_release_counts_informational():
    """Absolute ESCO release counts, reported informationally when available."""
    esco_dir = os.environ.get("ESCOBENCH_ESCO_DIR")
    if not esco_dir:
        print(
            "INFO: no ESCO release available (set ESCOBENCH_ESCO_DIR to check "
            "absolute counts 64,877 essential / 58,875 optional / 123,752 total)"
        )
        return
    taxonomy, _ = load_esco_csv(esco_dir)
    stats = taxonomy.stats()
    total = stats.n_essential + stats.n_optional
    expected = (64_877, 58_875, 123_752)
    actual = (stats.n_essential, stats.n_optional, total)
    match = "matches" if actual == expected else "differs from"
    print(f"INFO: ESCO release counts {actual} {match} the reference release {expected}")


def test_negative_sampling_soundness():
    """No EL/QA negative coincides with a true pair, exhaustively, 100 taxonomies."""
    with criterion("negative-sampling soundness on 100 random taxonomies"):
        violations = 0
        for seed in range(100):
            taxonomy = random_taxonomy(seed, max_entities=20)
            config = GenConfig(seed=seed * 31 + 1)

            truth = true_synonym_pairs(taxonomy)
            for example in gen_el(taxonomy, config):
                if example.polarity == "negative":
                    if (example.provenance.subject, example.provenance.object) in truth:
                        violations += 1

            for example in gen_qa(taxonomy, config):
                if example.polarity == "negative":
                    own = taxonomy.get(example.provenance.subject).description
                    donor = taxonomy.get(example.provenance.object).description
                    if donor == own or example.provenance.subject == example.provenance.object:
                        violations += 1
        assert violations == 0


def test_decontamination_soundness():
    """Train/pool entity intersection empty on 100 random fixtures; oracle agrees."""
    with criterion("decontamination soundness on 100 random fixtures"):
        for seed in range(100):
            taxonomy = random_taxonomy(seed, max_entities=20)
            examples = gen_ecrc(taxonomy, GenConfig(seed=seed))
            train, dev, remainder = sample_kshot(examples, SplitConfig(seed=seed, k=1))
            filtered = decontaminate_ecrc(train + dev, remainder)

            train_ids = set()
            for example in train + dev:
                train_ids |= entity_ids(example)
            pool_ids = set()
            for example in filtered:
                pool_ids |= entity_ids(example)
            assert not (train_ids & pool_ids)

            oracle = sorted(
                brute_force_decontaminate(train + dev, remainder),
                key=lambda e: e.example_id,
            )
            assert filtered == oracle


def test_metric_oracle_equivalence():
    """Macro-F1 agrees with the brute-force oracle to 1e-12 on 1,000 instances."""
    with criterion("macro-F1 oracle equivalence (1,000 random instances, 1e-12)"):
        rng = random.Random(2024)
        for _ in range(1000):
            classes = [f"c{i}" for i in range(rng.randint(2, 6))]
            pairs = [
                (rng.choice(classes), rng.choice(classes))
                for _ in range(rng.randint(1, 150))
            ]
            examples, predictions, verbalizers = make_run(pairs)
            run = score_run(examples, predictions, verbalizers)
            assert abs(run.per_role["bin"] - brute_force_macro_f1(pairs)) <= 1e-12

        # closed form: majority class on a balanced binary set scores 1/3
        pairs = [("a", "a")] * 64 + [("b", "a")] * 64
        examples, predictions, verbalizers = make_run(pairs)
        run = score_run(examples, predictions, verbalizers)
        assert run.per_role["bin"] == pytest.approx(1 / 3, abs=1e-15)
        assert run.per_role["bin"] == pytest.approx(
            brute_force_macro_f1(pairs), abs=1e-15
        )


def _tree_digest(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_pipeline_determinism(tmp_path):
    """generate -> split -> export twice: byte-identical, 1k+ examples, <10s."""
    with criterion("byte-identical reruns of generate/split/export (<10 s)"):
        taxonomy = medium_taxonomy(seed=17, n_skills=80, n_occupations=30)
        tax_dir = tmp_path / "tax"
        write_canonical(taxonomy, tax_dir / "entities.jsonl", tax_dir / "relations.jsonl")

        def run_pipeline(root: Path) -> float:
            started = time.perf_counter()
            assert run_cli("generate", "--taxonomy", tax_dir, "--task", "all",
                           "--seed", 7, "--out", root / "data") == 0
            for task in ("ecrc", "el", "qa"):
                assert run_cli("split", "--dataset", root / "data" / f"{task}.jsonl",
                               "--k", 4, "--seed", 3, "--eval-sets", 9,
                               "--eval-size", 32, "--out", root / f"splits_{task}") == 0
            return time.perf_counter() - started

        elapsed = run_pipeline(tmp_path / "run_a")
        run_pipeline(tmp_path / "run_b")

        total = sum(
            len(generator(taxonomy, GenConfig(seed=7)))
            for generator in (gen_ecrc, gen_el, gen_qa)
        )
        assert total >= 1000, f"fixture only produced {total} examples"
        assert elapsed < 10.0, f"pipeline took {elapsed:.2f}s"
        assert _tree_digest(tmp_path / "run_a") == _tree_digest(tmp_path / "run_b")


def test_end_to_end_gold_oracle(tmp_path):
    """Gold-oracle predictions score mean 1.000 +/- 0.000 over 9 eval sets."""
    with criterion("end-to-end gold-oracle run scores 1.000 +/- 0.000"):
        taxonomy = medium_taxonomy(seed=29, n_skills=120, n_occupations=60,
                                   min_rels=1, max_rels=3)
        tax_dir = tmp_path / "tax"
        write_canonical(taxonomy, tax_dir / "entities.jsonl", tax_dir / "relations.jsonl")
        assert run_cli("generate", "--taxonomy", tax_dir, "--task", "all",
                       "--seed", 11, "--out", tmp_path / "data") == 0
        import json

        for task in ("ecrc", "el", "qa"):
            splits = tmp_path / f"splits_{task}"
            preds = tmp_path / f"preds_{task}"
            assert run_cli("split", "--dataset", tmp_path / "data" / f"{task}.jsonl",
                           "--k", 8, "--seed", 13, "--eval-sets", 9,
                           "--eval-size", 16, "--out", splits) == 0
            assert run_cli("mock-predict", "--eval", splits, "--policy", "gold_oracle",
                           "--out", preds) == 0
            report_path = tmp_path / f"report_{task}.json"
            assert run_cli("score", "--eval-dir", splits, "--predictions-dir", preds,
                           "--out", report_path) == 0
            report = json.loads(report_path.read_text())
            assert report["n_runs"] == 9
            assert report["aggregate"]["combined"]["mean"] == 1.0
            assert report["aggregate"]["combined"]["std"] == 0.0
