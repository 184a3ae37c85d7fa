"""K-shot finetuning with per-epoch dev scoring and best-checkpoint selection.

Optimization is decoupled-weight-decay AdamW with weight decay disabled for
normalization-layer and bias parameters. The training target per example is
the gold label-word sequence at the mask positions. After every epoch the
dev set is scored with the same combined macro-F1 the harness reports; the
checkpoint with the best dev score is the one saved.
"""

from __future__ import annotations

import copy
import json
import random
from pathlib import Path

import torch

from .config import RunnerConfig
from .engine import DivergenceError, MaskedSeq2SeqScorer, RunnerError, _oom_guard
from .metrics import combined_score
from .protocol import Dataset, read_dataset

MANIFEST_NAME = "manifest.json"

_NO_DECAY_MARKERS = ("layer_norm", "layernorm", "rms_norm")


def _parameter_groups(model: torch.nn.Module, weight_decay: float) -> list[dict]:
    decay, no_decay = [], []
    for name, parameter in model.named_parameters():
        if not parameter.requires_grad:
            continue
        lowered = name.lower()
        if lowered.endswith(".bias") or any(m in lowered for m in _NO_DECAY_MARKERS):
            no_decay.append(parameter)
        else:
            decay.append(parameter)
    return [
        {"params": decay, "weight_decay": weight_decay},
        {"params": no_decay, "weight_decay": 0.0},
    ]


def _dev_pairs(
    scorer: MaskedSeq2SeqScorer, dataset: Dataset, batch_size: int
) -> dict[str, list[tuple[str, str]]]:
    predictions = dict(scorer.predict_dataset(dataset, batch_size))
    pairs: dict[str, list[tuple[str, str]]] = {}
    for example in dataset.examples:
        picks = predictions[example.example_id]
        for mask in example.masks:
            pairs.setdefault(mask.class_space, []).append((mask.gold, picks[mask.index]))
    return pairs


def evaluate(scorer: MaskedSeq2SeqScorer, dataset: Dataset, batch_size: int) -> float:
    """Combined macro-F1 of the model's argmax predictions on a dataset."""
    return combined_score(_dev_pairs(scorer, dataset, batch_size))


def finetune(
    train_file: str | Path,
    dev_file: str | Path,
    config: RunnerConfig,
    out_dir: str | Path,
) -> dict:
    """Train on the gold label words, select the best epoch by dev score,
    save the checkpoint, and return its manifest."""
    if config.mode not in ("finetune_ptr", "finetune_instruction"):
        raise RunnerError(f"finetune needs a finetune mode, got {config.mode!r}")
    train_set = read_dataset(train_file)
    dev_set = read_dataset(dev_file)
    if not train_set.examples:
        raise RunnerError(f"{train_file}: no training examples")

    torch.manual_seed(config.seed)
    scorer = MaskedSeq2SeqScorer(config.model, config.device)
    model = scorer.model

    encoded = [
        (
            scorer.encode_prompt(example.text),
            scorer.joint_target(example, train_set.verbalizers),
        )
        for example in train_set.examples
    ]
    optimizer = torch.optim.AdamW(
        _parameter_groups(model, config.weight_decay), lr=config.resolved_learning_rate
    )
    order_rng = random.Random(f"{config.seed}:order")

    epoch_scores: list[float] = []
    best_state: dict | None = None
    best_score = float("-inf")
    for epoch in range(1, config.resolved_epochs + 1):
        model.train()
        order = list(range(len(encoded)))
        order_rng.shuffle(order)
        try:
            for start in range(0, len(order), config.batch_size):
                rows = [encoded[i] for i in order[start : start + config.batch_size]]
                input_ids = scorer.pad_rows([r[0] for r in rows], scorer.pad_id).to(scorer.device)
                attention = (input_ids != scorer.pad_id).long()
                labels = scorer.pad_rows([r[1] for r in rows], -100).to(scorer.device)
                loss = model(
                    input_ids=input_ids, attention_mask=attention, labels=labels
                ).loss
                if not torch.isfinite(loss):
                    raise DivergenceError(
                        f"non-finite loss at epoch {epoch}; lower the learning rate"
                    )
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
        except RuntimeError as exc:
            _oom_guard(exc, config.batch_size)
        model.eval()
        score = evaluate(scorer, dev_set, config.batch_size) if dev_set.examples else 0.0
        epoch_scores.append(score)
        if score > best_score:
            best_score = score
            best_state = copy.deepcopy(model.state_dict())

    if best_state is not None:
        model.load_state_dict(best_state)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    scorer.tokenizer.save_pretrained(out_dir)
    manifest = {
        **config.as_dict(),
        "dev_score": max(epoch_scores) if epoch_scores else 0.0,
        "epoch_dev_scores": epoch_scores,
        "train_file": str(train_file),
        "dev_file": str(dev_file),
    }
    (out_dir / MANIFEST_NAME).write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest
