"""Encoder-decoder wrapper: mask-to-sentinel mapping and label-word scoring.

Prediction is per-mask independent argmax over the mask's candidate label
words. Each candidate is scored by teacher-forcing the decoder on
``<extra_id_{k-1}> <word tokens>`` and taking the *mean* token log-probability
over the word tokens, so label words that tokenize to different lengths
compete fairly (length-normalized sequence log-likelihood). Ties break toward
the lexicographically smallest class.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import torch
from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
from transformers.utils import logging as hf_logging

from .protocol import Dataset, Example

hf_logging.set_verbosity_error()
hf_logging.disable_progress_bar()

NORMALIZATION = "mean-token-logprob"
MASK_MARKER_RE = re.compile(r"<mask_(\d+)>")


class RunnerError(Exception):
    pass


class ModelLoadError(RunnerError):
    pass


class OutOfMemoryError(RunnerError):
    pass


class DivergenceError(RunnerError):
    """Non-finite training loss."""


def _oom_guard(exc: RuntimeError, batch_size: int) -> None:
    if "out of memory" in str(exc).lower():
        raise OutOfMemoryError(
            f"out of memory at batch size {batch_size}; retry with a smaller --batch-size"
        ) from exc
    raise exc


@dataclass
class CandidateItem:
    example_pos: int
    mask_index: int
    class_label: str
    input_ids: list[int]
    target_ids: list[int]
    word_positions: tuple[int, int]  # half-open slice of scored target positions


class MaskedSeq2SeqScorer:
    """Loads a seq2seq LM and scores verbalizer words at mask positions."""

    def __init__(self, model_path: str, device: str = "cpu"):
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_path)
            self.model = AutoModelForSeq2SeqLM.from_pretrained(model_path)
        except Exception as exc:
            raise ModelLoadError(f"cannot load model {model_path!r}: {exc}") from exc
        self.device = torch.device(device)
        self.model.to(self.device)
        self.model.eval()
        self.pad_id = self.tokenizer.pad_token_id
        self.eos_id = self.tokenizer.eos_token_id
        if self.pad_id is None or self.eos_id is None:
            raise ModelLoadError(f"model {model_path!r} lacks pad/eos tokens")
        self.decoder_start_id = getattr(
            self.model.config, "decoder_start_token_id", None
        )
        if self.decoder_start_id is None:
            self.decoder_start_id = self.pad_id

    def sentinel_id(self, mask_index: int) -> int:
        token = f"<extra_id_{mask_index - 1}>"
        token_id = self.tokenizer.convert_tokens_to_ids(token)
        if token_id is None or token_id == self.tokenizer.unk_token_id:
            raise ModelLoadError(f"tokenizer has no sentinel token {token}")
        return token_id

    def encode_prompt(self, text: str) -> list[int]:
        """Map ``<mask_k>`` markers to sentinel tokens and tokenize."""
        replaced = MASK_MARKER_RE.sub(lambda m: f"<extra_id_{int(m.group(1)) - 1}>", text)
        return self.tokenizer(replaced, add_special_tokens=False).input_ids + [self.eos_id]

    def encode_word(self, word: str) -> list[int]:
        return self.tokenizer(word, add_special_tokens=False).input_ids

    def joint_target(self, example: Example, verbalizers: dict[str, dict[str, str]]) -> list[int]:
        """Training target: each mask's sentinel followed by its gold label word."""
        ids: list[int] = []
        for mask in example.masks:
            if mask.gold is None:
                raise RunnerError(f"example {example.example_id} has no gold labels")
            word = verbalizers[mask.class_space][mask.gold]
            ids.append(self.sentinel_id(mask.index))
            ids.extend(self.encode_word(word))
        ids.append(self.eos_id)
        return ids

    def shift_right(self, labels: torch.Tensor) -> torch.Tensor:
        shifted = torch.full_like(labels, self.pad_id)
        shifted[:, 1:] = labels[:, :-1]
        shifted[:, 0] = self.decoder_start_id
        return shifted

    def pad_rows(self, rows: list[list[int]], pad_value: int) -> torch.Tensor:
        width = max(len(r) for r in rows)
        return torch.tensor(
            [r + [pad_value] * (width - len(r)) for r in rows], dtype=torch.long
        )

    @torch.no_grad()
    def _score_batch(self, items: list[CandidateItem]) -> list[float]:
        input_ids = self.pad_rows([i.input_ids for i in items], self.pad_id).to(self.device)
        attention = (input_ids != self.pad_id).long()
        targets = self.pad_rows([i.target_ids for i in items], self.pad_id).to(self.device)
        decoder_input = self.shift_right(targets)
        logits = self.model(
            input_ids=input_ids, attention_mask=attention, decoder_input_ids=decoder_input
        ).logits
        logprobs = torch.log_softmax(logits.float(), dim=-1)
        token_lp = logprobs.gather(-1, targets.unsqueeze(-1)).squeeze(-1)
        scores = []
        for row, item in enumerate(items):
            start, stop = item.word_positions
            span = token_lp[row, start:stop]
            if span.numel() == 0:  # degenerate: label word tokenized to nothing
                span = token_lp[row, :1]
            scores.append(float(span.mean()))
        return scores

    def predict_dataset(self, dataset: Dataset, batch_size: int = 32) -> list[tuple[str, dict[int, str]]]:
        """Per-mask argmax over candidate label words for every example."""
        items: list[CandidateItem] = []
        for pos, example in enumerate(dataset.examples):
            input_ids = self.encode_prompt(example.text)
            for mask in example.masks:
                space = dataset.space(mask.class_space)
                for class_label in sorted(space):
                    word_ids = self.encode_word(space[class_label])
                    target = [self.sentinel_id(mask.index)] + word_ids + [self.eos_id]
                    items.append(
                        CandidateItem(
                            example_pos=pos,
                            mask_index=mask.index,
                            class_label=class_label,
                            input_ids=input_ids,
                            target_ids=target,
                            word_positions=(1, 1 + len(word_ids)),
                        )
                    )

        best: dict[tuple[int, int], tuple[float, str]] = {}
        try:
            for start in range(0, len(items), batch_size):
                batch = items[start : start + batch_size]
                for item, score in zip(batch, self._score_batch(batch)):
                    key = (item.example_pos, item.mask_index)
                    # strict > keeps the first (lexicographically smallest) class on ties
                    if key not in best or score > best[key][0]:
                        best[key] = (score, item.class_label)
        except RuntimeError as exc:
            _oom_guard(exc, batch_size)

        predictions = []
        for pos, example in enumerate(dataset.examples):
            picks = {mask.index: best[(pos, mask.index)][1] for mask in example.masks}
            predictions.append((example.example_id, picks))
        return predictions
