import json

import pytest

from conftest import run_escobench, write_toy_taxonomy
from escorunner.cli import main
from escorunner.config import RunnerConfig
from escorunner.engine import DivergenceError, MaskedSeq2SeqScorer, ModelLoadError
from escorunner.finetune import finetune
from escorunner.protocol import read_dataset


def run_cli(*args) -> int:
    return main([str(a) for a in args])


class TestRunnerConfig:
    def test_ptr_defaults(self):
        config = RunnerConfig(model="m", mode="finetune_ptr")
        assert config.resolved_learning_rate == 3e-5
        assert config.resolved_epochs == 10
        assert config.batch_size == 32

    def test_instruction_defaults(self):
        config = RunnerConfig(model="m", mode="finetune_instruction")
        assert config.resolved_learning_rate == 2e-5
        assert config.resolved_epochs == 5

    def test_overrides_win(self):
        config = RunnerConfig(model="m", mode="finetune_ptr", learning_rate=1e-3, epochs=2)
        assert config.resolved_learning_rate == 1e-3
        assert config.resolved_epochs == 2

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            RunnerConfig(model="m", mode="pretrain")


class TestZeroShot:
    def test_covers_every_example_and_mask(self, tiny_model, qa_k4_splits, tmp_path):
        eval_file = qa_k4_splits / "eval_set_1.jsonl"
        out = tmp_path / "p.jsonl"
        assert run_cli("zero-shot", "--model", tiny_model, "--dataset", eval_file,
                       "--out", out, "--batch-size", 64) == 0
        dataset = read_dataset(eval_file)
        records = [json.loads(l) for l in out.read_text().splitlines()]
        assert {r["example_id"] for r in records} == {e.example_id for e in dataset.examples}
        for record in records:
            assert set(record["predictions"]) == {"1"}
            assert record["predictions"]["1"] in ("yes", "no")
        meta = json.loads((tmp_path / "p.jsonl.meta.json").read_text())
        assert meta["normalization"] == "mean-token-logprob"

    def test_deterministic(self, tiny_model, qa_k4_splits, tmp_path):
        eval_file = qa_k4_splits / "eval_set_1.jsonl"
        outs = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
        for out in outs:
            assert run_cli("zero-shot", "--model", tiny_model, "--dataset", eval_file,
                           "--out", out) == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()

    def test_single_candidate_always_predicted(self, tiny_model, tmp_path):
        header = {"record": "header", "schema_version": "1", "task": "qa",
                  "verbalizers": {"only": {"sole": "the only word"}}}
        rows = [json.dumps(header)]
        for i in range(3):
            rows.append(json.dumps({
                "record": "example", "example_id": f"e{i}", "task": "qa",
                "text": f"prompt {i} <mask_1>",
                "masks": [{"index": 1, "class_space": "only", "gold": "sole"}],
                "polarity": "positive",
                "provenance": {"subject": "a", "object": "a", "source": "description"},
            }))
        dataset_path = tmp_path / "degenerate.jsonl"
        dataset_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        out = tmp_path / "p.jsonl"
        assert run_cli("zero-shot", "--model", tiny_model, "--dataset", dataset_path,
                       "--out", out) == 0
        for line in out.read_text().splitlines():
            assert json.loads(line)["predictions"]["1"] == "sole"

    def test_empty_eval_file_gives_empty_predictions(self, tiny_model, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("", encoding="utf-8")
        out = tmp_path / "p.jsonl"
        assert run_cli("zero-shot", "--model", tiny_model, "--dataset", empty,
                       "--out", out) == 0
        assert out.read_text() == ""

    def test_unknown_schema_version_exits_2(self, tiny_model, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"record": "header", "schema_version": "9", "verbalizers": {}}\n',
                       encoding="utf-8")
        assert run_cli("zero-shot", "--model", tiny_model, "--dataset", bad,
                       "--out", tmp_path / "p.jsonl") == 2
        assert "schema_version" in capsys.readouterr().err

    def test_model_load_error(self, tmp_path):
        with pytest.raises(ModelLoadError):
            MaskedSeq2SeqScorer(str(tmp_path / "missing"))


class TestFinetune:
    def config(self, tiny_model, **overrides) -> RunnerConfig:
        defaults = dict(model=str(tiny_model), mode="finetune_instruction",
                        learning_rate=3e-3, epochs=4, batch_size=4, seed=9)
        defaults.update(overrides)
        return RunnerConfig(**defaults)

    def test_checkpoint_selection_is_max_over_epochs(self, tiny_model, qa_k4_splits, tmp_path):
        manifest = finetune(qa_k4_splits / "train_k.jsonl", qa_k4_splits / "dev_k.jsonl",
                            self.config(tiny_model), tmp_path / "ckpt")
        assert manifest["dev_score"] == max(manifest["epoch_dev_scores"])
        assert len(manifest["epoch_dev_scores"]) == 4
        assert (tmp_path / "ckpt" / "manifest.json").is_file()

    def test_identical_runs_identical_epoch_scores(self, tiny_model, qa_k4_splits, tmp_path):
        runs = []
        for name in ("a", "b"):
            manifest = finetune(qa_k4_splits / "train_k.jsonl",
                                qa_k4_splits / "dev_k.jsonl",
                                self.config(tiny_model), tmp_path / name)
            runs.append(manifest["epoch_dev_scores"])
        assert runs[0] == runs[1]

    def test_ptr_mode_echoes_defaults(self, tiny_model, qa_k4_splits, tmp_path):
        manifest = finetune(qa_k4_splits / "train_k.jsonl", qa_k4_splits / "dev_k.jsonl",
                            self.config(tiny_model, mode="finetune_ptr",
                                        learning_rate=None, epochs=2),
                            tmp_path / "ckpt")
        assert manifest["learning_rate"] == 3e-5
        assert manifest["mode"] == "finetune_ptr"
        assert manifest["batch_size"] == 4

    def test_divergence_detected(self, tiny_model, qa_k4_splits, tmp_path):
        with pytest.raises(DivergenceError):
            finetune(qa_k4_splits / "train_k.jsonl", qa_k4_splits / "dev_k.jsonl",
                     self.config(tiny_model, learning_rate=1e8, epochs=3),
                     tmp_path / "ckpt")

    def test_checkpoint_usable_by_predict(self, tiny_model, qa_k4_splits, tmp_path):
        finetune(qa_k4_splits / "train_k.jsonl", qa_k4_splits / "dev_k.jsonl",
                 self.config(tiny_model, epochs=1), tmp_path / "ckpt")
        out = tmp_path / "p.jsonl"
        assert run_cli("predict", "--checkpoint", tmp_path / "ckpt",
                       "--dataset", qa_k4_splits / "eval_set_1.jsonl", "--out", out) == 0
        assert out.read_text().strip()

    def test_missing_checkpoint_exits_2(self, qa_k4_splits, tmp_path):
        assert run_cli("predict", "--checkpoint", tmp_path / "ghost",
                       "--dataset", qa_k4_splits / "eval_set_1.jsonl",
                       "--out", tmp_path / "p.jsonl") == 2


class TestMultitaskTrainFile:
    def test_finetune_on_mixed_tasks(self, tiny_model, tmp_path):
        """A mixed train file (two tasks concatenated) trains a single model."""
        root = tmp_path
        write_toy_taxonomy(root / "tax", n_skills=20, n_occupations=8)
        config = {
            "schema_version": "1",
            "mode": "multitask",
            "taxonomy": {"entities": "tax/entities.jsonl", "relations": "tax/relations.jsonl"},
            "tasks": ["ecrc", "qa"],
            "gen": {"seed": 5},
            "split": {"seed": 2, "k": 2, "eval_sets": 1, "eval_size": 8},
            "out_dir": "exp",
        }
        (root / "exp.json").write_text(json.dumps(config), encoding="utf-8")
        assert run_escobench("run-experiment", "--config", root / "exp.json").returncode == 0
        mixed_train = root / "exp" / "mixed" / "train_ecrc+qa.jsonl"
        mixed_dev = root / "exp" / "mixed" / "dev_ecrc+qa.jsonl"
        manifest = finetune(
            mixed_train, mixed_dev,
            RunnerConfig(model=str(tiny_model), mode="finetune_instruction",
                         learning_rate=1e-3, epochs=1, batch_size=4, seed=1),
            root / "ckpt",
        )
        assert manifest["dev_score"] >= 0.0
        # each task contributes k=2 examples per class, two classes each
        assert len(read_dataset(mixed_train).examples) == 8
