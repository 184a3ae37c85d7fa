"""Model-side runner for the benchmark file protocol.

Reads dataset JSONL files (cloze prompts with ``<mask_k>`` markers and
verbalizer tables), runs an encoder-decoder language model to score label
words at each mask, and writes prediction files the evaluation harness can
score. Supports zero-shot scoring and K-shot finetuning with best-checkpoint
selection.
"""

__version__ = "0.1.0"
